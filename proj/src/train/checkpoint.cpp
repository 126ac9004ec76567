#include <istream>
#include <ostream>

#include "ltc/nn/serialize.hpp"
#include "ltc/train/trainer.hpp"

namespace ltc::train {

using namespace nn::io;

namespace {

constexpr char kMagic[4] = {'L', 'T', 'C', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_grads(std::ostream& os, const nn::GradBundle& g) {
  write_u32(os, static_cast<std::uint32_t>(g.layers.size()));
  for (const nn::LayerGrads& l : g.layers) {
    write_vec(os, l.dw.a);
    write_vec(os, l.db);
    write_vec(os, l.dscale);
    write_vec(os, l.dshift);
  }
}

void read_grads(std::istream& is, nn::GradBundle& g) {
  const std::uint32_t n = read_u32(is);
  check(n == g.layers.size(), "checkpoint: optimizer layer count mismatch");
  for (nn::LayerGrads& l : g.layers) {
    Vec w = read_vec(is);
    check(w.size() == l.dw.size(), "checkpoint: optimizer tensor size mismatch");
    l.dw.a = std::move(w);
    l.db = read_vec(is);
    l.dscale = read_vec(is);
    l.dshift = read_vec(is);
  }
}

void write_adam(std::ostream& os, const nn::AdamState& s) {
  write_u64(os, s.t);
  write_grads(os, s.m);
  write_grads(os, s.v);
}

void read_adam(std::istream& is, nn::AdamState& s) {
  s.t = read_u64(is);
  read_grads(is, s.m);
  read_grads(is, s.v);
}

// stop_env_steps only tells the loop where to pause; a checkpoint written
// under one stop point must resume under another.
std::string config_match_text(const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.stop_env_steps = 0;
  return resolved_config_text(c);
}

}  // namespace

std::string checkpoint_config_text(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  check(is.good() && std::equal(magic, magic + 4, kMagic), "checkpoint: bad magic");
  check(read_u32(is) == kVersion, "checkpoint: unsupported version");
  return read_string(is);
}

void Trainer::save_checkpoint(std::ostream& os) const {
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  // The embedded config drops the stop point: resuming without an explicit
  // --stop-steps should run to total_env_steps, not re-apply the old pause.
  write_string(os, config_match_text(cfg_));

  write_u64(os, env_steps_);
  write_u64(os, updates_);
  write_u64(os, episodes_);
  write_u64(os, evals_);

  nn::write_mlp(os, policy_.body);
  write_vec(os, policy_.log_std);
  nn::write_mlp(os, value_.body);
  nn::write_mlp(os, lyap_.body);
  write_vec(os, lyap_.equilibrium_obs);

  write_adam(os, opt_policy_);
  write_adam(os, opt_value_);
  write_adam(os, opt_lyap_);
  write_u64(os, opt_log_std_.t);
  write_vec(os, opt_log_std_.m);
  write_vec(os, opt_log_std_.v);

  write_u64(os, static_cast<std::uint64_t>(envs_.size()));
  for (const env::TossCatchEnv& e : envs_) e.save(os);

  write_string(os, action_rng_.serialize());
  write_string(os, shuffle_rng_.serialize());

  write_vec(os, Vec(window_returns_.begin(), window_returns_.end()));
  write_u64(os, static_cast<std::uint64_t>(window_success_.size()));
  for (std::uint8_t s : window_success_) write_u8(os, s);
  write_f64(os, last_return_);
  write_vec(os, env_return_);
  write_u64(os, static_cast<std::uint64_t>(env_len_.size()));
  for (std::uint64_t l : env_len_) write_u64(os, l);

  check(os.good(), "checkpoint: stream write failed");
}

void Trainer::load_checkpoint(std::istream& is) {
  const std::string stored = checkpoint_config_text(is);
  const TrainConfig stored_cfg = parse_config_text(stored);
  check(config_match_text(stored_cfg) == config_match_text(cfg_),
        "checkpoint: stored config does not match this trainer's config");

  env_steps_ = read_u64(is);
  updates_ = read_u64(is);
  episodes_ = read_u64(is);
  evals_ = read_u64(is);

  policy_.body = nn::read_mlp(is);
  policy_.log_std = read_vec(is);
  value_.body = nn::read_mlp(is);
  lyap_.body = nn::read_mlp(is);
  lyap_.equilibrium_obs = read_vec(is);

  read_adam(is, opt_policy_);
  read_adam(is, opt_value_);
  read_adam(is, opt_lyap_);
  opt_log_std_.t = read_u64(is);
  opt_log_std_.m = read_vec(is);
  opt_log_std_.v = read_vec(is);

  const std::uint64_t n_envs = read_u64(is);
  check(n_envs == envs_.size(), "checkpoint: env count mismatch");
  for (env::TossCatchEnv& e : envs_) e.load(is);
  for (std::size_t e = 0; e < envs_.size(); ++e) {
    const Vec o = envs_[e].observation();
    for (int j = 0; j < env::obs::kDim; ++j)
      cur_obs_(static_cast<int>(e), j) = o[static_cast<std::size_t>(j)];
  }

  action_rng_.deserialize(read_string(is));
  shuffle_rng_.deserialize(read_string(is));

  const Vec rets = read_vec(is);
  window_returns_.assign(rets.begin(), rets.end());
  const std::uint64_t n_succ = read_u64(is);
  window_success_.clear();
  for (std::uint64_t i = 0; i < n_succ; ++i) window_success_.push_back(read_u8(is));
  last_return_ = read_f64(is);
  env_return_ = read_vec(is);
  check(env_return_.size() == envs_.size(), "checkpoint: per-env return size mismatch");
  const std::uint64_t n_len = read_u64(is);
  check(n_len == envs_.size(), "checkpoint: per-env length size mismatch");
  for (std::size_t e = 0; e < envs_.size(); ++e) env_len_[e] = read_u64(is);

  check(is.good(), "checkpoint: stream read failed");
}

}  // namespace ltc::train
