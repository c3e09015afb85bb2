#include "sbnet/schedule.hpp"

#include "sbnet/error.hpp"

namespace sbnet {

Strategy Strategy::parse(const std::string& name) {
    Strategy s;
    if (name == "random") {
        s.kind = Kind::Random;
    } else if (name == "hefhev") {
        s.kind = Kind::HeFHeV;
    } else if (name == "hevhef") {
        s.kind = Kind::HeVHeF;
    } else if (name == "vfvf") {
        s.kind = Kind::VFVF;
    } else if (name == "fvfv") {
        s.kind = Kind::FVFV;
    } else if (name == "only_face") {
        s.kind = Kind::OnlyFace;
    } else if (name == "only_voice") {
        s.kind = Kind::OnlyVoice;
    } else if (name.rfind("block:", 0) == 0) {
        s.kind = Kind::Block;
        const auto rest = name.substr(6);
        const auto colon = rest.find(':');
        const std::string mod = rest.substr(0, colon);
        if (mod == "face")
            s.block_modality = Modality::Face;
        else if (mod == "voice")
            s.block_modality = Modality::Voice;
        else
            throw ConfigError("strategy '" + name + "': modality must be face|voice");
        s.block_epochs = 1;
        if (colon != std::string::npos) {
            const long k = std::stol(rest.substr(colon + 1));
            if (k < 1) throw ConfigError("strategy '" + name + "': k must be >= 1");
            s.block_epochs = std::size_t(k);
        }
    } else {
        throw ConfigError("unknown strategy '" + name + "'");
    }
    return s;
}

std::string Strategy::name() const {
    switch (kind) {
        case Kind::Random: return "random";
        case Kind::HeFHeV: return "hefhev";
        case Kind::HeVHeF: return "hevhef";
        case Kind::VFVF: return "vfvf";
        case Kind::FVFV: return "fvfv";
        case Kind::OnlyFace: return "only_face";
        case Kind::OnlyVoice: return "only_voice";
        case Kind::Block:
            return "block:" +
                   std::string(block_modality == Modality::Face ? "face" : "voice") +
                   ":" + std::to_string(block_epochs);
    }
    return "?";
}

EpochPlan plan_epoch(const Strategy& s, std::size_t epoch, std::size_t n_batches,
                     Rng& rng) {
    if (n_batches < 1) throw ConfigError("plan_epoch: n_batches must be >= 1");
    EpochPlan plan(n_batches, Modality::Face);
    const auto fill = [&](Modality m) {
        for (auto& tag : plan) tag = m;
    };
    switch (s.kind) {
        case Strategy::Kind::Random:
            for (auto& tag : plan) tag = rng.coin() ? Modality::Face : Modality::Voice;
            break;
        case Strategy::Kind::HeFHeV: {
            const std::size_t half = (n_batches + 1) / 2;
            for (std::size_t i = 0; i < n_batches; ++i)
                plan[i] = i < half ? Modality::Face : Modality::Voice;
            break;
        }
        case Strategy::Kind::HeVHeF: {
            const std::size_t half = (n_batches + 1) / 2;
            for (std::size_t i = 0; i < n_batches; ++i)
                plan[i] = i < half ? Modality::Voice : Modality::Face;
            break;
        }
        case Strategy::Kind::VFVF:
            // first letter names epoch 0
            fill(epoch % 2 == 0 ? Modality::Voice : Modality::Face);
            break;
        case Strategy::Kind::FVFV:
            fill(epoch % 2 == 0 ? Modality::Face : Modality::Voice);
            break;
        case Strategy::Kind::Block: {
            const bool primary = (epoch / s.block_epochs) % 2 == 0;
            const Modality other = s.block_modality == Modality::Face
                                       ? Modality::Voice
                                       : Modality::Face;
            fill(primary ? s.block_modality : other);
            break;
        }
        case Strategy::Kind::OnlyFace:
            fill(Modality::Face);
            break;
        case Strategy::Kind::OnlyVoice:
            fill(Modality::Voice);
            break;
    }
    return plan;
}

std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::size_t>& record_ids, std::size_t batch_size, Rng& rng) {
    if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");
    if (record_ids.size() < batch_size)
        throw DataError("make_batches: " + std::to_string(record_ids.size()) +
                        " records, need at least " + std::to_string(batch_size));
    std::vector<std::size_t> shuffled = record_ids;
    // Fisher-Yates with the repo Rng, not std::shuffle (platform-stable).
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        const std::size_t j = rng.below(i + 1);
        std::swap(shuffled[i], shuffled[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start + batch_size <= shuffled.size();
         start += batch_size) {
        batches.emplace_back(shuffled.begin() + start,
                             shuffled.begin() + start + batch_size);
    }
    return batches;
}

}  // namespace sbnet
