#pragma once

#include <cstdint>
#include <string>

#include "aenet/model.hpp"

namespace aenet {

struct Checkpoint {
  AENetConfig config;
  int epoch = 0;
  std::uint64_t global_step = 0;
};

/// Versioned binary container: architecture header, epoch/step counters, then
/// named parameter tensors with their optimizer moments. Round trips are
/// bit-exact.
void save_checkpoint(const std::string& path, AENet<float>& net, const Adam<float>& opt,
                     int epoch, std::uint64_t global_step);

/// Rebuilds the network and optimizer state recorded at `path`.
Checkpoint load_checkpoint(const std::string& path, AENet<float>& net_out,
                           Adam<float>& opt_out);

}  // namespace aenet
