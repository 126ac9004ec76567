#include "ltc/nn/serialize.hpp"

namespace ltc::nn {

using namespace io;

namespace {
constexpr char kMagic[4] = {'L', 'T', 'C', '1'};
constexpr std::uint8_t kFlagBn = 1;
constexpr std::uint8_t kFlagElu = 2;
}  // namespace

void write_mlp(std::ostream& os, const MlpParams& params) {
  os.write(kMagic, 4);
  write_u32(os, static_cast<std::uint32_t>(params.layers.size()));
  for (const Layer& l : params.layers) {
    write_u32(os, static_cast<std::uint32_t>(l.out_dim()));
    write_u32(os, static_cast<std::uint32_t>(l.in_dim()));
    std::uint8_t flags = 0;
    if (l.has_bn) flags |= kFlagBn;
    if (l.has_elu) flags |= kFlagElu;
    write_u8(os, flags);
    for (double v : l.w.a) write_f64(os, v);
    for (double v : l.b) write_f64(os, v);
  }
  write_u8(os, params.penultimate_norm ? 1 : 0);
  write_f64(os, params.bn_eps);
  write_f64(os, params.bn_momentum);
  for (const Layer& l : params.layers) {
    if (!l.has_bn) continue;
    write_vec(os, l.bn_scale);
    write_vec(os, l.bn_shift);
    write_vec(os, l.bn_running_mean);
    write_vec(os, l.bn_running_var);
  }
}

MlpParams read_mlp(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  check(is.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0,
        "read_mlp: bad magic, not a network blob");
  MlpParams params;
  const std::uint32_t nl = read_u32(is);
  check(nl > 0 && nl < 1000, "read_mlp: implausible layer count");
  for (std::uint32_t li = 0; li < nl; ++li) {
    const std::uint32_t out = read_u32(is);
    const std::uint32_t in = read_u32(is);
    check(out > 0 && in > 0 && out < (1u << 20) && in < (1u << 20),
          "read_mlp: implausible layer dims");
    const std::uint8_t flags = read_u8(is);
    Layer l;
    l.has_bn = (flags & kFlagBn) != 0;
    l.has_elu = (flags & kFlagElu) != 0;
    l.w = Mat(static_cast<int>(out), static_cast<int>(in));
    for (double& v : l.w.a) v = read_f64(is);
    l.b.resize(out);
    for (double& v : l.b) v = read_f64(is);
    params.layers.push_back(std::move(l));
  }
  params.penultimate_norm = read_u8(is) != 0;
  params.bn_eps = read_f64(is);
  params.bn_momentum = read_f64(is);
  for (Layer& l : params.layers) {
    if (!l.has_bn) continue;
    l.bn_scale = read_vec(is);
    l.bn_shift = read_vec(is);
    l.bn_running_mean = read_vec(is);
    l.bn_running_var = read_vec(is);
    check(l.bn_scale.size() == static_cast<std::size_t>(l.out_dim()),
          "read_mlp: normalization state size mismatch");
  }
  return params;
}

}  // namespace ltc::nn
