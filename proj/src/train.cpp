#include "sbnet/train.hpp"

#include <algorithm>
#include <deque>

#include "sbnet/error.hpp"

namespace sbnet {

Variant parse_variant(const std::string& name) {
    if (name == "single") return Variant::Single;
    if (name == "two") return Variant::Two;
    throw ConfigError("unknown model variant '" + name + "' (expected single|two)");
}

std::string variant_name(Variant v) {
    return v == Variant::Single ? "single" : "two";
}

namespace {

Matrix gather_rows(const Corpus& corpus, const std::vector<std::size_t>& record_ids) {
    Matrix x(record_ids.size(), corpus.d_in);
    for (std::size_t i = 0; i < record_ids.size(); ++i)
        std::copy(corpus.records[record_ids[i]].vec.begin(),
                  corpus.records[record_ids[i]].vec.end(), x.row(i).begin());
    return x;
}

// Hands out one shuffled batch at a time, reshuffling when exhausted, so a
// random plan can draw more batches of one modality than a single pass has.
class BatchQueue {
public:
    BatchQueue(std::vector<std::size_t> records, std::size_t batch_size, Rng rng)
        : records_(std::move(records)), batch_size_(batch_size), rng_(rng) {}

    std::vector<std::size_t> next() {
        if (queue_.empty()) {
            auto batches = make_batches(records_, batch_size_, rng_);
            queue_.assign(batches.begin(), batches.end());
        }
        auto batch = std::move(queue_.front());
        queue_.pop_front();
        return batch;
    }

    std::size_t batches_per_pass() const { return records_.size() / batch_size_; }

private:
    std::vector<std::size_t> records_;
    std::size_t batch_size_;
    Rng rng_;
    std::deque<std::vector<std::size_t>> queue_;
};

void train_single(const Corpus& corpus, const TrainConfig& cfg, TrainedModel& model,
                  Rng& rng) {
    const auto face_ids = select_records(corpus, Modality::Face, model.split.train);
    const auto voice_ids = select_records(corpus, Modality::Voice, model.split.train);
    if (face_ids.size() < cfg.batch_size || voice_ids.size() < cfg.batch_size)
        throw DataError("train: not enough records per modality for batch size " +
                        std::to_string(cfg.batch_size));

    BatchQueue face_queue(face_ids, cfg.batch_size, rng.fork());
    BatchQueue voice_queue(voice_ids, cfg.batch_size, rng.fork());
    Rng plan_rng = rng.fork();

    const std::size_t n_batches =
        std::min(face_queue.batches_per_pass(), voice_queue.batches_per_pass());

    const std::size_t n_params = model.single.trainable_size() + model.head.trainable_size();
    AdamState adam = AdamState::init(n_params, cfg.beta1, cfg.beta2, cfg.eps_adam);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg.sched, epoch);
        const EpochPlan plan = plan_epoch(cfg.strategy, epoch, n_batches, plan_rng);
        double loss_sum = 0.0;

        for (Modality tag : plan) {
            auto& queue = tag == Modality::Face ? face_queue : voice_queue;
            const auto record_ids = queue.next();

            Batch batch;
            batch.embeddings = Matrix();  // filled after forward
            batch.labels = label_records(corpus, record_ids, model.split.train);
            batch.tag = tag == Modality::Face ? BatchTag::Face : BatchTag::Voice;

            const Matrix x = gather_rows(corpus, record_ids);
            auto fwd = single_forward(model.single, x, Mode::Train);
            batch.embeddings = std::move(fwd.out);

            const TotalLossResult tl =
                total_loss(cfg.loss, model.head, model.centers, batch);
            loss_sum += tl.loss;

            const auto bwd = single_backward(model.single, fwd.cache, tl.grad_embeddings);

            std::vector<double> params, grads;
            params.reserve(n_params);
            grads.reserve(n_params);
            model.single.pack(params);
            model.head.pack(params);
            bwd.grads.pack(grads);
            grads.insert(grads.end(), tl.grad_head_w.data.begin(),
                         tl.grad_head_w.data.end());
            grads.insert(grads.end(), tl.grad_head_b.begin(), tl.grad_head_b.end());

            adam_step(adam, params, grads, lr);
            model.single.unpack(params);
            model.head.unpack(params, model.single.trainable_size());

            if (cfg.loss.kind != LossKind::Fop)
                center_update(model.centers, batch, cfg.loss.center_lr);
        }
        model.epoch_mean_loss.push_back(loss_sum / double(plan.size()));
    }
}

void train_two(const Corpus& corpus, const TrainConfig& cfg, TrainedModel& model,
               Rng& rng) {
    // The two-branch model consumes face and voice simultaneously: pair the
    // i-th shuffled face record of an identity with its i-th voice record.
    struct Pair {
        std::size_t face_rec, voice_rec;
        int label;
    };
    std::vector<Pair> pairs;
    Rng pair_rng = rng.fork();
    for (std::size_t c = 0; c < model.split.train.size(); ++c) {
        const std::vector<std::string> one = {model.split.train[c]};
        auto faces = select_records(corpus, Modality::Face, one);
        auto voices = select_records(corpus, Modality::Voice, one);
        for (std::size_t i = faces.size() - 1; i > 0; --i)
            std::swap(faces[i], faces[pair_rng.below(i + 1)]);
        for (std::size_t i = voices.size() - 1; i > 0; --i)
            std::swap(voices[i], voices[pair_rng.below(i + 1)]);
        const std::size_t n = std::min(faces.size(), voices.size());
        for (std::size_t i = 0; i < n; ++i)
            pairs.push_back({faces[i], voices[i], int(c)});
    }
    if (pairs.size() < cfg.batch_size)
        throw DataError("train: not enough face-voice pairs for batch size " +
                        std::to_string(cfg.batch_size));

    std::vector<std::size_t> pair_ids(pairs.size());
    for (std::size_t i = 0; i < pair_ids.size(); ++i) pair_ids[i] = i;
    BatchQueue queue(pair_ids, cfg.batch_size, rng.fork());
    const std::size_t n_batches = queue.batches_per_pass();

    const std::size_t n_params = model.two.trainable_size() + model.head.trainable_size();
    AdamState adam = AdamState::init(n_params, cfg.beta1, cfg.beta2, cfg.eps_adam);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg.sched, epoch);
        double loss_sum = 0.0;

        for (std::size_t b = 0; b < n_batches; ++b) {
            const auto ids = queue.next();
            Matrix xf(ids.size(), corpus.d_in), xv(ids.size(), corpus.d_in);
            Batch batch;
            batch.tag = BatchTag::Fused;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const Pair& pr = pairs[ids[i]];
                std::copy(corpus.records[pr.face_rec].vec.begin(),
                          corpus.records[pr.face_rec].vec.end(), xf.row(i).begin());
                std::copy(corpus.records[pr.voice_rec].vec.begin(),
                          corpus.records[pr.voice_rec].vec.end(), xv.row(i).begin());
                batch.labels.push_back(pr.label);
            }

            auto fwd = two_forward(model.two, xf, xv);
            batch.embeddings = std::move(fwd.l);

            const TotalLossResult tl =
                total_loss(cfg.loss, model.head, model.centers, batch);
            loss_sum += tl.loss;

            const TwoBranchGrads g = two_backward(model.two, fwd.cache, tl.grad_embeddings);

            std::vector<double> params, grads;
            params.reserve(n_params);
            grads.reserve(n_params);
            model.two.pack(params);
            model.head.pack(params);
            g.pack(grads);
            grads.insert(grads.end(), tl.grad_head_w.data.begin(),
                         tl.grad_head_w.data.end());
            grads.insert(grads.end(), tl.grad_head_b.begin(), tl.grad_head_b.end());

            adam_step(adam, params, grads, lr);
            model.two.unpack(params);
            model.head.unpack(params, model.two.trainable_size());

            if (cfg.loss.kind != LossKind::Fop)
                center_update(model.centers, batch, cfg.loss.center_lr);
        }
        model.epoch_mean_loss.push_back(loss_sum / double(n_batches));
    }
}

}  // namespace

TrainedModel train_model(const Corpus& corpus, const TrainConfig& cfg,
                         const TrainedModel* warm_start) {
    if (corpus.records.empty()) throw DataError("train: empty corpus");

    Rng rng(cfg.seed);
    Rng init_rng = rng.fork();
    Rng split_rng = rng.fork();

    TrainedModel model;
    if (warm_start) {
        model = *warm_start;
        model.epoch_mean_loss.clear();
        if (model.d_in != corpus.d_in)
            throw DataError("warm start: corpus d_in mismatch");
    } else {
        model.variant = cfg.variant;
        model.d_in = corpus.d_in;
        model.hidden = cfg.hidden;
        model.embed_dim = cfg.embed_dim;
        model.seed = cfg.seed;
        model.loss_kind = cfg.loss.kind;
        model.split = make_splits(corpus, cfg.train_frac, cfg.val_frac, cfg.test_frac,
                                  split_rng);
        const std::size_t n_classes = model.split.train.size();
        if (cfg.variant == Variant::Single)
            model.single = SingleBranchParams::init(corpus.d_in, cfg.hidden,
                                                    cfg.embed_dim, init_rng);
        else
            model.two = TwoBranchParams::init(corpus.d_in, cfg.hidden, cfg.embed_dim,
                                              init_rng);
        model.head = ClassifierHead::init(cfg.embed_dim, n_classes, init_rng);
        model.centers.c = Matrix(n_classes, cfg.embed_dim);
    }

    if (cfg.epochs == 0) return model;

    if (model.variant == Variant::Single)
        train_single(corpus, cfg, model, rng);
    else
        train_two(corpus, cfg, model, rng);
    return model;
}

}  // namespace sbnet
