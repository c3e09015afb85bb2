#include "sbnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "sbnet/error.hpp"

namespace sbnet {

using nlohmann::json;

std::string modality_name(Modality m) {
    return m == Modality::Face ? "face" : "voice";
}

Modality parse_modality(const std::string& name) {
    if (name == "face") return Modality::Face;
    if (name == "voice") return Modality::Voice;
    throw ConfigError("unknown modality '" + name + "'");
}

namespace {

bool is_binary_path(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
}

constexpr char kMagic[4] = {'S', 'B', 'N', 'C'};
constexpr std::uint32_t kBinaryVersion = 1;

void write_string(std::ofstream& out, const std::string& s) {
    const std::uint32_t n = std::uint32_t(s.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(s.data(), std::streamsize(n));
}

std::string read_string(std::ifstream& in) {
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::string s(n, '\0');
    in.read(s.data(), std::streamsize(n));
    return s;
}

Corpus load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a binary corpus file: " + path);
    std::uint32_t version = 0;
    std::uint64_t d_in = 0, count = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&d_in), sizeof(d_in));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (version != kBinaryVersion)
        throw DataError("unsupported corpus version " + std::to_string(version));

    Corpus corpus;
    corpus.d_in = std::size_t(d_in);
    corpus.records.reserve(count);
    for (std::uint64_t r = 0; r < count; ++r) {
        EmbeddingRecord rec;
        rec.identity = read_string(in);
        std::uint8_t mod = 0, has_meta = 0;
        in.read(reinterpret_cast<char*>(&mod), 1);
        rec.modality = mod == 0 ? Modality::Face : Modality::Voice;
        in.read(reinterpret_cast<char*>(&has_meta), 1);
        if (has_meta) {
            Demographics d;
            d.gender = read_string(in);
            d.nationality = read_string(in);
            d.age_group = read_string(in);
            rec.meta = d;
        }
        rec.vec.resize(corpus.d_in);
        in.read(reinterpret_cast<char*>(rec.vec.data()),
                std::streamsize(corpus.d_in * sizeof(double)));
        if (!in) throw DataError("truncated corpus record " + std::to_string(r));
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

void save_binary(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write corpus file: " + path);
    out.write(kMagic, 4);
    const std::uint32_t version = kBinaryVersion;
    const std::uint64_t d_in = corpus.d_in;
    const std::uint64_t count = corpus.records.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&d_in), sizeof(d_in));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& rec : corpus.records) {
        write_string(out, rec.identity);
        const std::uint8_t mod = rec.modality == Modality::Face ? 0 : 1;
        const std::uint8_t has_meta = rec.meta ? 1 : 0;
        out.write(reinterpret_cast<const char*>(&mod), 1);
        out.write(reinterpret_cast<const char*>(&has_meta), 1);
        if (rec.meta) {
            write_string(out, rec.meta->gender);
            write_string(out, rec.meta->nationality);
            write_string(out, rec.meta->age_group);
        }
        out.write(reinterpret_cast<const char*>(rec.vec.data()),
                  std::streamsize(rec.vec.size() * sizeof(double)));
    }
}

Corpus load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("corpus parse error at line " + std::to_string(line_no) +
                            ": " + e.what());
        }
        if (!have_header) {
            if (!j.contains("d_in"))
                throw DataError("corpus header missing d_in at line " +
                                std::to_string(line_no));
            corpus.d_in = j.at("d_in").get<std::size_t>();
            have_header = true;
            continue;
        }
        EmbeddingRecord rec;
        try {
            rec.identity = j.at("id").get<std::string>();
            rec.modality = parse_modality(j.at("modality").get<std::string>());
            rec.vec = j.at("vector").get<std::vector<double>>();
            if (j.contains("meta")) {
                Demographics d;
                d.gender = j["meta"].value("gender", "");
                d.nationality = j["meta"].value("nationality", "");
                d.age_group = j["meta"].value("age_group", "");
                rec.meta = d;
            }
        } catch (const json::exception& e) {
            throw DataError("corpus record error at line " + std::to_string(line_no) +
                            ": " + e.what());
        }
        if (rec.identity.empty())
            throw DataError("empty identity at line " + std::to_string(line_no));
        if (rec.vec.size() != corpus.d_in)
            throw DataError("dimension drift at line " + std::to_string(line_no) +
                            ": got " + std::to_string(rec.vec.size()) + ", header says " +
                            std::to_string(corpus.d_in));
        for (double v : rec.vec)
            if (!std::isfinite(v))
                throw DataError("non-finite value in record at line " +
                                std::to_string(line_no));
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

void save_jsonl(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write corpus file: " + path);
    out << json{{"d_in", corpus.d_in}, {"version", 1}}.dump() << "\n";
    for (const auto& rec : corpus.records) {
        json j{{"id", rec.identity},
               {"modality", modality_name(rec.modality)},
               {"vector", rec.vec}};
        if (rec.meta) {
            j["meta"] = {{"gender", rec.meta->gender},
                         {"nationality", rec.meta->nationality},
                         {"age_group", rec.meta->age_group}};
        }
        out << j.dump() << "\n";
    }
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    return is_binary_path(path) ? load_binary(path) : load_jsonl(path);
}

void save_corpus(const std::string& path, const Corpus& corpus) {
    if (is_binary_path(path))
        save_binary(path, corpus);
    else
        save_jsonl(path, corpus);
}

SplitSpec make_splits(const Corpus& corpus, double train_frac, double val_frac,
                      double test_frac, Rng& rng) {
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");

    std::vector<std::string> identities;
    for (const auto& rec : corpus.records)
        if (std::find(identities.begin(), identities.end(), rec.identity) ==
            identities.end())
            identities.push_back(rec.identity);
    if (identities.size() < 3)
        throw DataError("make_splits: need at least 3 identities, have " +
                        std::to_string(identities.size()));

    for (std::size_t i = identities.size() - 1; i > 0; --i)
        std::swap(identities[i], identities[rng.below(i + 1)]);

    const std::size_t n = identities.size();
    const auto n_train = std::size_t(std::llround(train_frac * double(n)));
    const auto n_val = std::size_t(std::llround(val_frac * double(n)));

    SplitSpec spec;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train)
            spec.train.push_back(identities[i]);
        else if (i < n_train + n_val)
            spec.validation.push_back(identities[i]);
        else
            spec.test.push_back(identities[i]);
    }
    return spec;
}

Corpus gen_synthetic(const SynthConfig& cfg) {
    if (cfg.n_identities < 1 || cfg.samples_per_identity_per_modality < 1 ||
        cfg.latent_dim < 1 || cfg.d_in < 1)
        throw ConfigError("gen_synthetic: counts must be >= 1");
    if (cfg.noise_std < 0.0) throw ConfigError("gen_synthetic: noise_std must be >= 0");

    Rng rng(cfg.seed);
    const double map_std = 0.3 / std::sqrt(double(cfg.latent_dim));
    const Matrix map_face = gaussian(rng, cfg.d_in, cfg.latent_dim, 0.0, map_std);
    Matrix map_voice_drawn = gaussian(rng, cfg.d_in, cfg.latent_dim, 0.0, map_std);
    // An independently drawn voice map overlaps the face map's column space
    // by chance, which an untrained encoder already scores above chance.
    // Orthogonalize the voice map against the face map and blend back a small
    // fixed overlap so the cross-modal signal is present but weak until a
    // model actually learns the shared latent.
    if (!cfg.shared_projection && 2 * cfg.latent_dim <= cfg.d_in) {
        Matrix q = map_face;  // orthonormal basis of the face map's columns
        for (std::size_t k = 0; k < q.cols; ++k) {
            for (std::size_t p = 0; p < k; ++p) {
                double proj = 0.0;
                for (std::size_t i = 0; i < q.rows; ++i) proj += q(i, p) * q(i, k);
                for (std::size_t i = 0; i < q.rows; ++i) q(i, k) -= proj * q(i, p);
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < q.rows; ++i) norm += q(i, k) * q(i, k);
            norm = std::sqrt(norm);
            if (norm < kNormEps) continue;
            for (std::size_t i = 0; i < q.rows; ++i) q(i, k) /= norm;
        }
        for (std::size_t k = 0; k < map_voice_drawn.cols; ++k)
            for (std::size_t p = 0; p < q.cols; ++p) {
                double proj = 0.0;
                for (std::size_t i = 0; i < q.rows; ++i)
                    proj += q(i, p) * map_voice_drawn(i, k);
                for (std::size_t i = 0; i < q.rows; ++i)
                    map_voice_drawn(i, k) -= proj * q(i, p);
            }
        const double overlap = kCrossModalOverlap;
        const double keep = std::sqrt(1.0 - overlap * overlap);
        for (std::size_t i = 0; i < map_voice_drawn.rows; ++i)
            for (std::size_t k = 0; k < map_voice_drawn.cols; ++k)
                map_voice_drawn(i, k) =
                    keep * map_voice_drawn(i, k) + overlap * map_face(i, k);
    }
    const Matrix& map_voice = cfg.shared_projection ? map_face : map_voice_drawn;

    static const std::vector<std::string> genders = {"m", "f"};
    static const std::vector<std::string> nationalities = {"A", "B", "C", "D", "E"};
    static const std::vector<std::string> age_groups = {"young", "mid", "senior"};

    Corpus corpus;
    corpus.d_in = cfg.d_in;
    for (std::size_t id = 0; id < cfg.n_identities; ++id) {
        std::vector<double> z(cfg.latent_dim);
        for (double& v : z) v = rng.normal();

        Demographics meta{genders[id % genders.size()],
                          nationalities[id % nationalities.size()],
                          age_groups[id % age_groups.size()]};
        const std::string identity = "id" + std::to_string(id);

        for (Modality mod : {Modality::Face, Modality::Voice}) {
            const Matrix& map = mod == Modality::Face ? map_face : map_voice;
            for (std::size_t s = 0; s < cfg.samples_per_identity_per_modality; ++s) {
                EmbeddingRecord rec;
                rec.identity = identity;
                rec.modality = mod;
                rec.meta = meta;
                rec.vec.assign(cfg.d_in, 0.0);
                for (std::size_t i = 0; i < cfg.d_in; ++i) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < cfg.latent_dim; ++k)
                        acc += map(i, k) * z[k];
                    rec.vec[i] = acc + (cfg.noise_std > 0.0
                                            ? rng.normal(0.0, cfg.noise_std)
                                            : 0.0);
                }
                corpus.records.push_back(std::move(rec));
            }
        }
    }
    return corpus;
}

std::vector<std::size_t> select_records(const Corpus& corpus, Modality modality,
                                        const std::vector<std::string>& identities) {
    std::unordered_map<std::string, bool> wanted;
    for (const auto& id : identities) wanted[id] = true;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& rec = corpus.records[i];
        if (rec.modality == modality && wanted.count(rec.identity)) out.push_back(i);
    }
    return out;
}

std::vector<int> label_records(const Corpus& corpus,
                               const std::vector<std::size_t>& record_ids,
                               const std::vector<std::string>& identities) {
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < identities.size(); ++i)
        index[identities[i]] = int(i);
    std::vector<int> labels;
    labels.reserve(record_ids.size());
    for (std::size_t rid : record_ids) {
        const auto it = index.find(corpus.records[rid].identity);
        if (it == index.end())
            throw DataError("record identity '" + corpus.records[rid].identity +
                            "' not in the training identity list");
        labels.push_back(it->second);
    }
    return labels;
}

}  // namespace sbnet
