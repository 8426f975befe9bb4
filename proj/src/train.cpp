#include "wastenet/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wastenet/loss.hpp"
#include "wastenet/rng.hpp"

namespace wastenet {

EarlyStopMonitor::EarlyStopMonitor(int patience) : patience_(patience) {
    if (patience < 1) throw ValueError("early-stop patience must be >= 1");
}

bool EarlyStopMonitor::observe(double val_acc) {
    ++epoch_;
    if (val_acc > best_acc_ + 1e-6) {
        best_acc_ = val_acc;
        best_epoch_ = epoch_;
        return false;
    }
    const int window = patience_ > 1 ? patience_ - 1 : 1;
    return epoch_ - best_epoch_ >= window;
}

EarlyStopResult simulate_early_stop(const std::vector<double>& val_accs, int patience) {
    EarlyStopMonitor monitor(patience);
    for (double acc : val_accs)
        if (monitor.observe(acc)) break;
    return {monitor.epochs_seen(), monitor.best_epoch()};
}

int predict_class(Head head, const Tensor& probs, int row) {
    if (head == Head::Sigmoid1) return probs.at(row, 0) >= 0.5 ? 1 : 0;
    int best = 0;
    for (int j = 1; j < probs.shape()[1]; ++j)
        if (probs.at(row, j) > probs.at(row, best)) best = j;
    return best;
}

namespace {

// Loss on logits for the model's head; also counts correct predictions.
LossValue head_loss(Head head, const Tensor& logits, const Tensor& labels, int* correct) {
    const int b = logits.shape()[0];
    if (head == Head::Sigmoid1) {
        if (correct)
            for (int r = 0; r < b; ++r) {
                const int pred = logits.at(r, 0) >= 0.0 ? 1 : 0;  // sigmoid(z) >= .5 iff z >= 0
                if (pred == static_cast<int>(labels[r])) ++*correct;
            }
        return binary_cross_entropy(logits, labels);
    }
    const int n = logits.shape()[1];
    Tensor onehot(Shape{b, n});
    for (int r = 0; r < b; ++r) onehot.at(r, static_cast<int>(labels[r])) = 1.0;
    if (correct)
        for (int r = 0; r < b; ++r) {
            int best = 0;
            for (int j = 1; j < n; ++j)
                if (logits.at(r, j) > logits.at(r, best)) best = j;
            if (best == static_cast<int>(labels[r])) ++*correct;
        }
    return cross_entropy(logits, onehot);
}

struct SplitIndices {
    std::vector<int> train, val;
};

SplitIndices split_validation(std::int64_t n, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ValueError("validation fraction must be in (0,1)");
    std::vector<int> ids(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = static_cast<int>(i);
    Rng rng(Rng::mix(seed, 0x76616c)); // validation-split substream
    rng.shuffle(ids);
    std::int64_t n_val = static_cast<std::int64_t>(std::llround(fraction * n));
    if (n_val < 1) n_val = 1;
    if (n_val >= n) n_val = n - 1;
    SplitIndices s;
    s.val.assign(ids.begin(), ids.begin() + n_val);
    s.train.assign(ids.begin() + n_val, ids.end());
    return s;
}

struct Snapshot {
    std::vector<Tensor> tensors;
};

Snapshot take_snapshot(Model& model) {
    Snapshot s;
    for (const StateRef& st : model.state()) s.tensors.push_back(*st.value);
    return s;
}

void restore_snapshot(Model& model, const Snapshot& s) {
    const auto state = model.state();
    for (size_t i = 0; i < state.size(); ++i) *state[i].value = s.tensors[i];
}

}  // namespace

TrainReport train(Model& model, const DatasetIndex& train_index, const TrainConfig& config) {
    if (config.epochs < 1) throw ValueError("epochs must be >= 1");
    if (train_index.entries.empty()) throw DataError("empty training index");

    const std::int64_t n = static_cast<std::int64_t>(train_index.entries.size());
    const SplitIndices split =
        split_validation(n, config.validation_fraction, config.seed);
    const int extent = model.config().input_extent;

    BatchLoader loader(train_index, extent);
    OptimizerState opt(config.learning_rate, config.momentum);
    EarlyStopMonitor monitor(config.early_stop_patience);
    const auto params = model.params();

    TrainReport report;
    Snapshot best;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord rec;

        // training pass over the shuffled train split
        std::vector<std::vector<int>> plan = make_batch_plan(
            static_cast<std::int64_t>(split.train.size()), config.batch_size, config.seed,
            static_cast<std::uint64_t>(epoch));
        double loss_sum = 0.0;
        int correct = 0;
        std::int64_t seen = 0;
        for (size_t bi = 0; bi < plan.size(); ++bi) {
            std::vector<int> ids;
            ids.reserve(plan[bi].size());
            for (int local : plan[bi]) ids.push_back(split.train[static_cast<size_t>(local)]);
            const Batch batch = loader.load(ids);
            const Tensor logits = model.forward_logits(batch.images, Mode::Train);
            const LossValue loss = head_loss(model.head(), logits, batch.labels, &correct);
            if (!std::isfinite(loss.value))
                throw DivergenceError("divergence: non-finite loss at epoch " +
                                      std::to_string(epoch) + ", batch " + std::to_string(bi));
            loss_sum += loss.value * static_cast<double>(ids.size());
            seen += static_cast<std::int64_t>(ids.size());
            model.backward_from_logits(loss.grad);
            sgd_step(params, opt);
        }
        rec.train_loss = loss_sum / static_cast<double>(seen);
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);

        // validation pass, eval mode, fixed order
        double val_loss_sum = 0.0;
        int val_correct = 0;
        for (size_t start = 0; start < split.val.size();
             start += static_cast<size_t>(config.batch_size)) {
            const size_t end =
                std::min(start + static_cast<size_t>(config.batch_size), split.val.size());
            const std::vector<int> ids(split.val.begin() + static_cast<std::ptrdiff_t>(start),
                                       split.val.begin() + static_cast<std::ptrdiff_t>(end));
            const Batch batch = loader.load(ids);
            const Tensor logits = model.forward_logits(batch.images, Mode::Eval);
            const LossValue loss = head_loss(model.head(), logits, batch.labels, &val_correct);
            val_loss_sum += loss.value * static_cast<double>(ids.size());
        }
        rec.val_loss = val_loss_sum / static_cast<double>(split.val.size());
        rec.val_acc = static_cast<double>(val_correct) / static_cast<double>(split.val.size());
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const int best_before = monitor.best_epoch();
        const bool stop = monitor.observe(rec.val_acc);
        if (monitor.best_epoch() != best_before || best.tensors.empty())
            best = take_snapshot(model);
        report.epochs.push_back(rec);
        if (stop) break;
    }
    report.stopped_epoch = monitor.epochs_seen();
    report.best_epoch = monitor.best_epoch();
    restore_snapshot(model, best);
    return report;
}

std::array<ClassMetrics, 2> precision_recall_f1(const std::int64_t cm[2][2]) {
    std::array<ClassMetrics, 2> out;
    for (int c = 0; c < 2; ++c) {
        const std::int64_t tp = cm[c][c];
        const std::int64_t fp = cm[1 - c][c];
        const std::int64_t fn = cm[c][1 - c];
        ClassMetrics& m = out[static_cast<size_t>(c)];
        m.support = cm[c][0] + cm[c][1];
        m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        m.f1 = f1_from_pr(m.precision, m.recall);
    }
    return out;
}

double f1_from_pr(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

EvalReport report_from_confusion(const std::int64_t cm[2][2]) {
    EvalReport r;
    for (int a = 0; a < 2; ++a)
        for (int p = 0; p < 2; ++p) {
            if (cm[a][p] < 0) throw ValueError("confusion-matrix entries must be non-negative");
            r.cm[a][p] = cm[a][p];
        }
    r.per_class = precision_recall_f1(cm);
    r.total = cm[0][0] + cm[0][1] + cm[1][0] + cm[1][1];
    r.accuracy = r.total > 0
                     ? static_cast<double>(cm[0][0] + cm[1][1]) / static_cast<double>(r.total)
                     : 0.0;
    return r;
}

EvalReport evaluate(Model& model, const DatasetIndex& test_index, int batch_size) {
    if (test_index.entries.empty()) throw DataError("empty test index");
    if (batch_size < 1) throw DataError("batch size must be >= 1");
    const int extent = model.config().input_extent;
    std::int64_t cm[2][2] = {{0, 0}, {0, 0}};
    const std::int64_t n = static_cast<std::int64_t>(test_index.entries.size());
    for (std::int64_t start = 0; start < n; start += batch_size) {
        const std::int64_t end = std::min<std::int64_t>(start + batch_size, n);
        std::vector<int> ids;
        for (std::int64_t i = start; i < end; ++i) ids.push_back(static_cast<int>(i));
        const Batch batch = load_batch(test_index, ids, extent);
        const Tensor probs = model.forward(batch.images, Mode::Eval);
        for (int r = 0; r < static_cast<int>(ids.size()); ++r) {
            const int actual = static_cast<int>(batch.labels[r]);
            const int pred = predict_class(model.head(), probs, r);
            ++cm[actual][pred];
        }
    }
    return report_from_confusion(cm);
}

void export_curves(const TrainReport& report, const std::string& path) {
    if (report.epochs.empty()) throw ValueError("cannot export an empty training report");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write curves file: " + path);
    os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    char buf[256];
    for (size_t i = 0; i < report.epochs.size(); ++i) {
        const EpochRecord& e = report.epochs[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i + 1, e.train_loss,
                      e.train_acc, e.val_loss, e.val_acc);
        os << buf;
    }
    if (!os) throw std::runtime_error("I/O error writing curves file: " + path);
}

std::string format_eval_report(const EvalReport& r) {
    const char* names[2] = {"Organic", "Recyclable"};
    std::ostringstream os;
    char buf[128];
    os << "confusion_matrix: [[" << r.cm[0][0] << ", " << r.cm[0][1] << "], [" << r.cm[1][0]
       << ", " << r.cm[1][1] << "]]\n";
    for (int c = 0; c < 2; ++c) {
        const ClassMetrics& m = r.per_class[static_cast<size_t>(c)];
        std::snprintf(buf, sizeof(buf), "%s: precision=%.4f recall=%.4f f1=%.4f support=%lld\n",
                      names[c], m.precision, m.recall, m.f1,
                      static_cast<long long>(m.support));
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "accuracy: %.4f\n", r.accuracy);
    os << buf;
    os << "total: " << r.total << "\n";
    return os.str();
}

}  // namespace wastenet
