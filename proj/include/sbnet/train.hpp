#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbnet/data.hpp"
#include "sbnet/losses.hpp"
#include "sbnet/model.hpp"
#include "sbnet/optim.hpp"
#include "sbnet/schedule.hpp"

namespace sbnet {

enum class Variant { Single, Two };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct TrainConfig {
    Variant variant = Variant::Single;
    std::size_t hidden = 256;
    std::size_t embed_dim = 128;
    LossConfig loss;
    LrSchedule sched;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    Strategy strategy;
    double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
    std::uint64_t seed = 1;
};

// Everything a run produces besides reports: parameters, centers, the
// identity split, and the per-epoch loss trace.
struct TrainedModel {
    Variant variant = Variant::Single;
    std::size_t d_in = 0, hidden = 0, embed_dim = 0;
    SingleBranchParams single;
    TwoBranchParams two;
    ClassifierHead head;
    Centers centers;
    SplitSpec split;
    std::vector<double> epoch_mean_loss;
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::Fop;
};

// Full training loop: per epoch plan_epoch, batch construction, forward,
// total_loss, backward, adam_step, center_update. `warm_start` continues
// from an existing model (same corpus dimensions and split) with a fresh
// optimizer; used for the modality-block forgetting probe.
TrainedModel train_model(const Corpus& corpus, const TrainConfig& cfg,
                         const TrainedModel* warm_start = nullptr);

}  // namespace sbnet
