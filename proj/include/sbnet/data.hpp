#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbnet/losses.hpp"
#include "sbnet/matrix.hpp"
#include "sbnet/rng.hpp"

namespace sbnet {

struct Demographics {
    std::string gender;
    std::string nationality;
    std::string age_group;
};

struct EmbeddingRecord {
    std::string identity;
    Modality modality = Modality::Face;
    std::vector<double> vec;
    std::optional<Demographics> meta;
};

struct Corpus {
    std::size_t d_in = 0;
    std::vector<EmbeddingRecord> records;
};

// JSON-lines corpus: a header line {"d_in":..,"version":1}, then one record
// per line. A ".bin" path selects the compact binary twin (magic "SBNC",
// little-endian doubles). Both round-trip vectors bit-exactly.
Corpus load_corpus(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);

std::string modality_name(Modality m);
Modality parse_modality(const std::string& name);

// Identity-disjoint train/validation/test lists (unseen-unheard).
struct SplitSpec {
    std::vector<std::string> train, validation, test;
};

SplitSpec make_splits(const Corpus& corpus, double train_frac, double val_frac,
                      double test_frac, Rng& rng);

struct SynthConfig {
    std::size_t n_identities = 64;
    std::size_t samples_per_identity_per_modality = 10;
    std::size_t latent_dim = 16;
    std::size_t d_in = 64;
    double noise_std = 0.3;
    std::uint64_t seed = 7;
    bool shared_projection = false;  // force A_f == A_v (degenerate testing)
};

// Cosine-scale overlap between the face and voice projection maps. The voice
// map is orthogonalized against the face map and this fraction blended back,
// so within-identity cross-modal similarity is positive but small enough that
// an untrained encoder scores near chance.
inline constexpr double kCrossModalOverlap = 0.02;

// Per identity, a shared latent z ~ N(0, I); face and voice samples are
// fixed random linear maps of z plus isotropic noise. Metadata tags are
// assigned round-robin so every stratum is populated at desk scale.
Corpus gen_synthetic(const SynthConfig& cfg);

// All record indices of one modality whose identity is in `identities`.
std::vector<std::size_t> select_records(const Corpus& corpus, Modality modality,
                                        const std::vector<std::string>& identities);

// Dense identity -> class index map over the given identity list.
std::vector<int> label_records(const Corpus& corpus,
                               const std::vector<std::size_t>& record_ids,
                               const std::vector<std::string>& identities);

}  // namespace sbnet
