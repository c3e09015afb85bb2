#pragma once

#include <string>

#include "sbnet/train.hpp"

namespace sbnet {

// Versioned JSON checkpoint: dimensions, every parameter tensor, BN running
// stats, centers, the identity split, and the run seed. Doubles round-trip
// exactly, so identical models produce identical files.
void save_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace sbnet
