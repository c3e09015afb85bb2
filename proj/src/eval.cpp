#include "sbnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "sbnet/error.hpp"

namespace sbnet {

Stratify parse_stratify(const std::string& name) {
    if (name == "random") return Stratify::Random;
    if (name == "g") return Stratify::Gender;
    if (name == "n") return Stratify::Nationality;
    if (name == "a") return Stratify::Age;
    if (name == "gna") return Stratify::GNA;
    throw ConfigError("unknown stratification '" + name +
                      "' (expected random|g|n|a|gna)");
}

std::string stratify_name(Stratify s) {
    switch (s) {
        case Stratify::Random: return "random";
        case Stratify::Gender: return "g";
        case Stratify::Nationality: return "n";
        case Stratify::Age: return "a";
        case Stratify::GNA: return "gna";
    }
    return "?";
}

Matrix embed_corpus(const SingleBranchParams& model, const Corpus& corpus) {
    Matrix x(corpus.records.size(), corpus.d_in);
    for (std::size_t r = 0; r < corpus.records.size(); ++r) {
        if (corpus.records[r].vec.size() != corpus.d_in)
            throw DataError("embed_corpus: record dimension mismatch");
        std::copy(corpus.records[r].vec.begin(), corpus.records[r].vec.end(),
                  x.row(r).begin());
    }
    if (x.rows == 0) return Matrix(0, model.d);
    return single_forward_eval(model, x);
}

Matrix embed_corpus(const TwoBranchParams& model, const Corpus& corpus) {
    Matrix out(corpus.records.size(), model.d);
    for (Modality mod : {Modality::Face, Modality::Voice}) {
        std::vector<std::size_t> ids;
        for (std::size_t r = 0; r < corpus.records.size(); ++r)
            if (corpus.records[r].modality == mod) ids.push_back(r);
        if (ids.empty()) continue;
        Matrix x(ids.size(), corpus.d_in);
        for (std::size_t i = 0; i < ids.size(); ++i)
            std::copy(corpus.records[ids[i]].vec.begin(),
                      corpus.records[ids[i]].vec.end(), x.row(i).begin());
        const Matrix e = branch_forward_eval(
            mod == Modality::Face ? model.face : model.voice, x);
        for (std::size_t i = 0; i < ids.size(); ++i)
            std::copy(e.row(i).begin(), e.row(i).end(), out.row(ids[i]).begin());
    }
    return out;
}

namespace {

struct IdentityPool {
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::vector<std::size_t>> face_recs, voice_recs;
    std::unordered_map<std::string, Demographics> meta;
};

IdentityPool build_pool(const Corpus& corpus,
                        const std::vector<std::string>& identities) {
    IdentityPool pool;
    std::unordered_map<std::string, bool> wanted;
    for (const auto& id : identities) wanted[id] = true;
    for (std::size_t r = 0; r < corpus.records.size(); ++r) {
        const auto& rec = corpus.records[r];
        if (!wanted.count(rec.identity)) continue;
        auto& bucket = rec.modality == Modality::Face ? pool.face_recs : pool.voice_recs;
        bucket[rec.identity].push_back(r);
        if (rec.meta) pool.meta[rec.identity] = *rec.meta;
    }
    for (const auto& id : identities)
        if (pool.face_recs.count(id) || pool.voice_recs.count(id))
            pool.ids.push_back(id);
    return pool;
}

bool same_stratum(const Demographics& a, const Demographics& b, Stratify s) {
    switch (s) {
        case Stratify::Random: return true;
        case Stratify::Gender: return a.gender == b.gender;
        case Stratify::Nationality: return a.nationality == b.nationality;
        case Stratify::Age: return a.age_group == b.age_group;
        case Stratify::GNA:
            return a.gender == b.gender && a.nationality == b.nationality &&
                   a.age_group == b.age_group;
    }
    return true;
}

}  // namespace

std::vector<Trial> make_verification_trials(const Corpus& corpus,
                                            const std::vector<std::string>& identities,
                                            std::size_t n_trials, Stratify stratify,
                                            Modality probe_mod, Modality cand_mod,
                                            Rng& rng) {
    IdentityPool pool = build_pool(corpus, identities);

    std::vector<std::string> usable;
    for (const auto& id : pool.ids) {
        const auto& probes =
            probe_mod == Modality::Face ? pool.face_recs : pool.voice_recs;
        const auto& cands = cand_mod == Modality::Face ? pool.face_recs : pool.voice_recs;
        if (probes.count(id) && cands.count(id)) usable.push_back(id);
    }
    if (usable.size() < 2)
        throw DataError("make_verification_trials: need >= 2 identities with both "
                        "modalities, have " + std::to_string(usable.size()));
    if (stratify != Stratify::Random)
        for (const auto& id : usable)
            if (!pool.meta.count(id))
                throw DataError("stratified trials need metadata; identity '" + id +
                                "' has none");

    const auto& probe_bucket =
        probe_mod == Modality::Face ? pool.face_recs : pool.voice_recs;
    const auto& cand_bucket =
        cand_mod == Modality::Face ? pool.face_recs : pool.voice_recs;

    auto pick = [&rng](const std::vector<std::size_t>& v) {
        return v[rng.below(v.size())];
    };

    std::vector<Trial> trials;
    trials.reserve(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t) {
        const bool positive = t % 2 == 0;
        const std::string& probe_id = usable[rng.below(usable.size())];
        Trial trial;
        trial.probe_rec = pick(probe_bucket.at(probe_id));
        if (positive) {
            trial.cand_rec = pick(cand_bucket.at(probe_id));
            trial.same_identity = true;
        } else {
            std::vector<const std::string*> stratum;
            for (const auto& id : usable) {
                if (id == probe_id) continue;
                if (stratify == Stratify::Random ||
                    same_stratum(pool.meta.at(probe_id), pool.meta.at(id), stratify))
                    stratum.push_back(&id);
            }
            if (stratum.empty())
                throw StratificationError(
                    "no negative identity shares stratum '" + stratify_name(stratify) +
                    "' with identity '" + probe_id + "'");
            const std::string& neg_id = *stratum[rng.below(stratum.size())];
            trial.cand_rec = pick(cand_bucket.at(neg_id));
            trial.same_identity = false;
        }
        trials.push_back(trial);
    }
    return trials;
}

void score_trials(std::vector<Trial>& trials, const Matrix& embedded) {
    for (auto& t : trials)
        t.score = cosine(embedded.row(t.probe_rec), embedded.row(t.cand_rec));
}

double auc_from_scores(const std::vector<double>& positives,
                       const std::vector<double>& negatives) {
    if (positives.empty() || negatives.empty())
        throw DataError("auc: needs at least one positive and one negative score");
    std::vector<double> neg_sorted = negatives;
    std::sort(neg_sorted.begin(), neg_sorted.end());
    double wins = 0.0;
    for (double p : positives) {
        const auto lo = std::lower_bound(neg_sorted.begin(), neg_sorted.end(), p);
        const auto hi = std::upper_bound(neg_sorted.begin(), neg_sorted.end(), p);
        wins += double(lo - neg_sorted.begin()) + 0.5 * double(hi - lo);
    }
    return wins / (double(positives.size()) * double(negatives.size()));
}

double eer_from_scores(const std::vector<double>& positives,
                       const std::vector<double>& negatives) {
    if (positives.empty() || negatives.empty())
        throw DataError("eer: needs at least one positive and one negative score");
    // Candidate thresholds: every distinct score. Accept when score >= t.
    std::vector<double> thresholds;
    thresholds.reserve(positives.size() + negatives.size());
    thresholds.insert(thresholds.end(), positives.begin(), positives.end());
    thresholds.insert(thresholds.end(), negatives.begin(), negatives.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());

    std::vector<double> pos_sorted = positives, neg_sorted = negatives;
    std::sort(pos_sorted.begin(), pos_sorted.end());
    std::sort(neg_sorted.begin(), neg_sorted.end());
    const double n_pos = double(pos_sorted.size());
    const double n_neg = double(neg_sorted.size());

    auto far_at = [&](double t) {
        return double(neg_sorted.end() -
                      std::lower_bound(neg_sorted.begin(), neg_sorted.end(), t)) /
               n_neg;
    };
    auto frr_at = [&](double t) {
        return double(std::lower_bound(pos_sorted.begin(), pos_sorted.end(), t) -
                      pos_sorted.begin()) /
               n_pos;
    };

    double prev_far = 1.0, prev_frr = 0.0;  // threshold below all scores
    for (double t : thresholds) {
        const double far = far_at(t);
        const double frr = frr_at(t);
        const double d = far - frr;
        if (d <= 0.0) {
            if (d == 0.0) return far;
            const double prev_d = prev_far - prev_frr;
            // Linear interpolation between adjacent operating points.
            const double s = prev_d / (prev_d - d);
            return prev_far + s * (far - prev_far);
        }
        prev_far = far;
        prev_frr = frr;
    }
    // FAR stayed above FRR through every threshold; the crossing sits at the
    // final step down to FAR = 0, FRR = 1.
    const double prev_d = prev_far - prev_frr;
    const double s = prev_d / (prev_d - (0.0 - 1.0));
    return prev_far + s * (0.0 - prev_far);
}

VerificationReport verification_metrics(const std::vector<Trial>& trials,
                                        Stratify stratify) {
    std::vector<double> pos, neg;
    for (const auto& t : trials)
        (t.same_identity ? pos : neg).push_back(t.score);
    if (pos.empty() || neg.empty())
        throw DataError("verification_metrics: trial set lacks a class (" +
                        std::to_string(pos.size()) + " positive, " +
                        std::to_string(neg.size()) + " negative)");
    VerificationReport rep;
    rep.auc = auc_from_scores(pos, neg);
    rep.eer = eer_from_scores(pos, neg);
    rep.n_trials = trials.size();
    rep.stratification = stratify_name(stratify);
    return rep;
}

MatchingReport matching_task(const Corpus& corpus, const Matrix& embedded,
                             const std::vector<std::string>& identities,
                             Modality probe_mod,
                             const std::vector<std::size_t>& gallery_sizes,
                             std::size_t n_trials, Rng& rng) {
    const Modality gallery_mod =
        probe_mod == Modality::Face ? Modality::Voice : Modality::Face;
    IdentityPool pool = build_pool(corpus, identities);

    std::vector<std::string> usable;
    for (const auto& id : pool.ids) {
        const auto& probes =
            probe_mod == Modality::Face ? pool.face_recs : pool.voice_recs;
        const auto& gals =
            gallery_mod == Modality::Face ? pool.face_recs : pool.voice_recs;
        if (probes.count(id) && gals.count(id)) usable.push_back(id);
    }

    MatchingReport report;
    for (std::size_t nc : gallery_sizes) {
        if (nc < 2) throw ConfigError("matching_task: gallery size must be >= 2");
        if (usable.size() < nc + 1)
            throw DataError("matching_task: need >= " + std::to_string(nc + 1) +
                            " identities for gallery size " + std::to_string(nc));
        MatchingPoint point;
        point.gallery_size = nc;
        point.n_trials = n_trials;
        std::size_t correct = 0;

        const auto& probe_bucket =
            probe_mod == Modality::Face ? pool.face_recs : pool.voice_recs;
        const auto& gal_bucket =
            gallery_mod == Modality::Face ? pool.face_recs : pool.voice_recs;

        for (std::size_t t = 0; t < n_trials; ++t) {
            const std::size_t probe_idx = rng.below(usable.size());
            const std::string& probe_id = usable[probe_idx];
            const auto& probes = probe_bucket.at(probe_id);
            const std::size_t probe_rec = probes[rng.below(probes.size())];

            // Gallery: the true match plus nc-1 distinct impostor identities,
            // then a random permutation of positions.
            std::vector<std::size_t> gallery;
            const auto& own = gal_bucket.at(probe_id);
            gallery.push_back(own[rng.below(own.size())]);
            std::vector<std::size_t> others;
            for (std::size_t i = 0; i < usable.size(); ++i)
                if (i != probe_idx) others.push_back(i);
            for (std::size_t k = others.size() - 1; k > 0; --k)
                std::swap(others[k], others[rng.below(k + 1)]);
            for (std::size_t k = 0; k + 1 < nc; ++k) {
                const auto& recs = gal_bucket.at(usable[others[k]]);
                gallery.push_back(recs[rng.below(recs.size())]);
            }
            std::size_t true_pos = 0;
            for (std::size_t k = gallery.size() - 1; k > 0; --k) {
                const std::size_t j = rng.below(k + 1);
                std::swap(gallery[k], gallery[j]);
            }
            for (std::size_t k = 0; k < gallery.size(); ++k)
                if (corpus.records[gallery[k]].identity == probe_id) true_pos = k;

            std::size_t best = 0;
            double best_score = -2.0;
            bool tie = false;
            for (std::size_t k = 0; k < gallery.size(); ++k) {
                const double s =
                    cosine(embedded.row(probe_rec), embedded.row(gallery[k]));
                if (s > best_score) {
                    best_score = s;
                    best = k;
                    tie = false;
                } else if (s == best_score) {
                    tie = true;  // lowest index already kept
                }
            }
            if (tie) ++point.ties;
            if (best == true_pos) ++correct;
        }
        point.accuracy = double(correct) / double(n_trials);
        report.points.push_back(point);
    }
    return report;
}

}  // namespace sbnet
