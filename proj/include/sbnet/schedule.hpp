#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sbnet/losses.hpp"
#include "sbnet/rng.hpp"

namespace sbnet {

// Which modality the single branch sees, batch by batch.
struct Strategy {
    enum class Kind { Random, HeFHeV, HeVHeF, VFVF, FVFV, Block, OnlyFace, OnlyVoice };
    Kind kind = Kind::Random;
    Modality block_modality = Modality::Face;  // Block only
    std::size_t block_epochs = 1;              // Block only

    static Strategy parse(const std::string& name);
    std::string name() const;
};

using EpochPlan = std::vector<Modality>;

// Deterministic given (strategy, epoch, n_batches, rng state).
EpochPlan plan_epoch(const Strategy& s, std::size_t epoch, std::size_t n_batches,
                     Rng& rng);

// Shuffled single-modality batches of record indices; the short final batch
// is dropped (train-mode BN needs stable statistics).
std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::size_t>& record_ids, std::size_t batch_size, Rng& rng);

}  // namespace sbnet
