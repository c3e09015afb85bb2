#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sbnet/data.hpp"
#include "sbnet/matrix.hpp"
#include "sbnet/model.hpp"
#include "sbnet/rng.hpp"

namespace sbnet {

struct Trial {
    std::size_t probe_rec = 0;
    std::size_t cand_rec = 0;
    bool same_identity = false;
    double score = 0.0;
};

enum class Stratify { Random, Gender, Nationality, Age, GNA };

Stratify parse_stratify(const std::string& name);
std::string stratify_name(Stratify s);

struct VerificationReport {
    double eer = 0.0;
    double auc = 0.0;
    std::size_t n_trials = 0;
    std::string stratification = "random";
};

struct MatchingPoint {
    std::size_t gallery_size = 0;
    double accuracy = 0.0;
    std::size_t n_trials = 0;
    std::size_t ties = 0;
};

struct MatchingReport {
    std::vector<MatchingPoint> points;
};

// Eval-mode forward over every corpus record; row r of the result is the
// embedding of corpus.records[r]. The single branch runs face and voice
// through the identical parameters.
Matrix embed_corpus(const SingleBranchParams& model, const Corpus& corpus);
// Two-branch: face records through the face branch, voice through voice,
// both L2 normalized (the per-modality embeddings that fusion consumes).
Matrix embed_corpus(const TwoBranchParams& model, const Corpus& corpus);

// Half positive, half negative pairs probe_mod vs cand_mod over the given
// (test) identities. Stratified negatives share the listed attributes with
// the probe identity. Deterministic under the rng seed.
std::vector<Trial> make_verification_trials(const Corpus& corpus,
                                            const std::vector<std::string>& identities,
                                            std::size_t n_trials, Stratify stratify,
                                            Modality probe_mod, Modality cand_mod,
                                            Rng& rng);

// Fill each trial's score with the cosine of the two embedded records.
void score_trials(std::vector<Trial>& trials, const Matrix& embedded);

// AUC by the rank statistic (ties count 1/2); EER by threshold sweep with
// linear interpolation at the FAR/FRR sign change.
double auc_from_scores(const std::vector<double>& positives,
                       const std::vector<double>& negatives);
double eer_from_scores(const std::vector<double>& positives,
                       const std::vector<double>& negatives);

VerificationReport verification_metrics(const std::vector<Trial>& trials,
                                        Stratify stratify = Stratify::Random);

// 1:n matching: per trial one probe, a gallery of the other modality with
// exactly one same-identity item, prediction by argmax cosine. Ties go to
// the lowest gallery index and are counted.
MatchingReport matching_task(const Corpus& corpus, const Matrix& embedded,
                             const std::vector<std::string>& identities,
                             Modality probe_mod,
                             const std::vector<std::size_t>& gallery_sizes,
                             std::size_t n_trials, Rng& rng);

}  // namespace sbnet
