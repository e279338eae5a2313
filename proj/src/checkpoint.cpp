#include "aenet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace aenet {

namespace {

constexpr char kMagic[8] = {'A', 'E', 'N', 'E', 'T', 'C', 'K', '1'};

template <typename V>
void wr(std::ostream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V rd(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void wr_str(std::ostream& os, const std::string& s) {
  wr<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string rd_str(std::istream& is) {
  const auto n = rd<std::uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, AENet<float>& net, const Adam<float>& opt,
                     int epoch, std::uint64_t global_step) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  wr<std::uint32_t>(os, 1);
  for (int w : net.cfg.encoder.widths) wr<std::int32_t>(os, w);
  for (int w : net.cfg.decoder_widths) wr<std::int32_t>(os, w);
  wr<std::int32_t>(os, net.cfg.sam_qk_channels);
  wr<std::int32_t>(os, net.cfg.sam_v_channels);
  wr<std::uint8_t>(os, net.cfg.use_sam ? 1 : 0);
  wr<std::uint8_t>(os, net.cfg.use_cam ? 1 : 0);
  wr<std::uint8_t>(os, net.cfg.use_ffb ? 1 : 0);
  wr<std::int32_t>(os, epoch);
  wr<std::uint64_t>(os, global_step);
  wr<std::uint64_t>(os, opt.t);

  auto params = net.params();
  if (opt.m.size() != params.size())
    throw std::logic_error("checkpoint: optimizer not initialised against this network");
  wr<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    wr_str(os, p.name);
    wr<std::uint32_t>(os, static_cast<std::uint32_t>(p.value->shape.size()));
    for (int d : p.value->shape) wr<std::int32_t>(os, d);
    const auto bytes = static_cast<std::streamsize>(p.value->numel() * sizeof(float));
    os.write(reinterpret_cast<const char*>(p.value->data()), bytes);
    os.write(reinterpret_cast<const char*>(opt.m[i].data()), bytes);
    os.write(reinterpret_cast<const char*>(opt.v[i].data()), bytes);
  }
  if (!os) throw std::runtime_error("checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path, AENet<float>& net_out,
                           Adam<float>& opt_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = rd<std::uint32_t>(is);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");

  Checkpoint ck;
  for (int& w : ck.config.encoder.widths) w = rd<std::int32_t>(is);
  for (int& w : ck.config.decoder_widths) w = rd<std::int32_t>(is);
  ck.config.sam_qk_channels = rd<std::int32_t>(is);
  ck.config.sam_v_channels = rd<std::int32_t>(is);
  ck.config.use_sam = rd<std::uint8_t>(is) != 0;
  ck.config.use_cam = rd<std::uint8_t>(is) != 0;
  ck.config.use_ffb = rd<std::uint8_t>(is) != 0;
  ck.epoch = rd<std::int32_t>(is);
  ck.global_step = rd<std::uint64_t>(is);
  const auto adam_t = rd<std::uint64_t>(is);

  net_out = AENet<float>(ck.config);
  auto params = net_out.params();
  opt_out = Adam<float>();
  opt_out.init(params);
  opt_out.t = adam_t;

  const auto n = rd<std::uint32_t>(is);
  if (n != params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = rd_str(is);
    if (name != params[i].name)
      throw std::runtime_error("checkpoint: parameter order mismatch at " + name);
    const auto ndim = rd<std::uint32_t>(is);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = rd<std::int32_t>(is);
    if (shape != params[i].value->shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    const auto bytes = static_cast<std::streamsize>(params[i].value->numel() * sizeof(float));
    is.read(reinterpret_cast<char*>(params[i].value->data()), bytes);
    is.read(reinterpret_cast<char*>(opt_out.m[i].data()), bytes);
    is.read(reinterpret_cast<char*>(opt_out.v[i].data()), bytes);
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
  }
  return ck;
}

}  // namespace aenet
