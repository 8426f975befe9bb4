#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wastenet/data.hpp"
#include "wastenet/model.hpp"

namespace wastenet {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 0.01;
    double momentum = 0.9;
    int early_stop_patience = 3;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double seconds = 0.0;  // wall time, excluded from all determinism contracts
};

struct TrainReport {
    std::vector<EpochRecord> epochs;  // index 0 is epoch 1
    int stopped_epoch = 0;
    int best_epoch = 0;
};

// Stop rule: an epoch improves when val accuracy beats the best by > 1e-6;
// stop once the plateau after the best epoch reaches the patience window.
// With patience 3 the sequence .80 .85 .85 .85 stops after epoch 4, best 2.
class EarlyStopMonitor {
public:
    explicit EarlyStopMonitor(int patience);
    // Feed one epoch's val accuracy; true means stop after this epoch.
    bool observe(double val_acc);
    int best_epoch() const { return best_epoch_; }
    int epochs_seen() const { return epoch_; }

private:
    int patience_, epoch_ = 0, best_epoch_ = 0;
    double best_acc_ = -1.0;
};

struct EarlyStopResult {
    int stopped_epoch;
    int best_epoch;
};
// Runs the monitor over an injected accuracy sequence.
EarlyStopResult simulate_early_stop(const std::vector<double>& val_accs, int patience);

// Train with a seeded validation split carved from the index, SGD with
// momentum, early stopping, and best-epoch weight restore.
TrainReport train(Model& model, const DatasetIndex& train_index, const TrainConfig& config);

struct ClassMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    std::int64_t support = 0;
};

struct EvalReport {
    // cm[actual][predicted]; [[TN,FP],[FN,TP]], positive class = Recyclable(1)
    std::int64_t cm[2][2] = {{0, 0}, {0, 0}};
    std::array<ClassMetrics, 2> per_class;
    double accuracy = 0.0;
    std::int64_t total = 0;
};

EvalReport evaluate(Model& model, const DatasetIndex& test_index, int batch_size);
EvalReport report_from_confusion(const std::int64_t cm[2][2]);
// Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); 0/0 is 0.
std::array<ClassMetrics, 2> precision_recall_f1(const std::int64_t cm[2][2]);
double f1_from_pr(double precision, double recall);

// CSV: epoch,train_loss,train_acc,val_loss,val_acc; 9 significant digits.
void export_curves(const TrainReport& report, const std::string& path);

// key: value text mirroring the classification-report layout.
std::string format_eval_report(const EvalReport& report);

// On full-forward outputs: sigmoid head thresholds at 0.5 (class 1 iff
// score >= 0.5), softmax head takes the argmax.
int predict_class(Head head, const Tensor& probs, int row);

}  // namespace wastenet
