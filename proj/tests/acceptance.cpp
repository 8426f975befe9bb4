// Acceptance suite: one criterion per invocation (argv[1] = 1..10), one
// pass/fail line per sub-check, exit 0 only if the criterion holds.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "support.hpp"
#include "wastenet/data.hpp"
#include "wastenet/loss.hpp"
#include "wastenet/model.hpp"
#include "wastenet/train.hpp"
#include "wastenet/verify.hpp"

using namespace wastenet;
using Clock = std::chrono::steady_clock;

namespace {

bool g_ok = true;

void check(bool pass, const std::string& what) {
    std::printf("  [%s] %s\n", pass ? "pass" : "FAIL", what.c_str());
    g_ok = g_ok && pass;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), format, a, b);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// ---- 1: gradient suite -----------------------------------------------------

void criterion_gradients() {
    const auto t0 = Clock::now();
    const auto results = run_gradient_suite(GradSuiteOptions{});
    for (const auto& r : results)
        check(r.max_rel_error < 1e-4,
              r.layer + fmt(" max rel error %.3e < 1e-4", r.max_rel_error));
    check(results.size() >= 10, "all ten layer kinds covered");
    const double dt = seconds_since(t0);
    check(dt < 60.0, fmt("runtime %.1fs < 60s", dt));
}

// ---- 2: conv oracle equivalence --------------------------------------------

void criterion_conv_oracle() {
    const auto t0 = Clock::now();
    const auto results = run_conv_equivalence_suite(1234, 20);
    check(results.size() >= 20, "at least 20 randomized geometries");
    double worst = 0.0;
    std::string worst_geom;
    for (const auto& r : results)
        if (r.max_abs_diff > worst) {
            worst = r.max_abs_diff;
            worst_geom = r.geometry;
        }
    check(worst < 1e-12, "worst " + worst_geom + fmt(": |diff| %.3e < 1e-12", worst));
    const double dt = seconds_since(t0);
    check(dt < 60.0, fmt("runtime %.1fs < 60s", dt));
}

// ---- 3: architecture census ------------------------------------------------

int count_kind(Model& m, const std::string& kind) {
    int n = 0;
    for (const auto& row : m.summary())
        if (row.kind == kind) ++n;
    return n;
}

void criterion_census() {
    {
        ModelConfig c;
        c.arch = Arch::Proposed;
        Model m = build_model(c);
        check(count_kind(m, "Conv2D") == 6 && count_kind(m, "MaxPool2D") == 3 &&
                  count_kind(m, "Dense") == 3,
              "proposed: 6 Conv2D / 3 MaxPool2D / 3 Dense");
        check(count_params(m) == testsupport::proposed_param_count(224, 1.0, true),
              "proposed parameter total equals the closed-form oracle");
    }
    {
        ModelConfig c;
        c.arch = Arch::VGG16;
        c.head = Head::Softmax2;
        Model m = build_model(c);
        check(count_kind(m, "Conv2D") == 13 && count_kind(m, "MaxPool2D") == 5 &&
                  count_kind(m, "Dense") == 3,
              "vgg16: 13 Conv2D / 5 MaxPool2D / 3 Dense");
        check(count_params(m) == testsupport::vgg16_param_count(224, 1.0, 2),
              "vgg16 parameter total equals the closed-form oracle");
    }
    {
        ModelConfig c;
        c.arch = Arch::ResNet34;
        c.head = Head::Softmax2;
        Model m = build_model(c);
        std::vector<int> blocks;
        for (const auto& layer : m.layers())
            if (layer->kind() == "ResidualBlock")
                blocks.push_back(dynamic_cast<ResidualBlockLayer&>(*layer).conv1().out_channels());
        int per_stage[4] = {0, 0, 0, 0};
        const int channels[4] = {64, 128, 256, 512};
        for (int ch : blocks)
            for (int s = 0; s < 4; ++s)
                if (ch == channels[s]) ++per_stage[s];
        check(blocks.size() == 16 && per_stage[0] == 3 && per_stage[1] == 4 &&
                  per_stage[2] == 6 && per_stage[3] == 3,
              "resnet34: [3,4,6,3] residual blocks at channels [64,128,256,512]");
        check(count_params(m) == testsupport::resnet34_param_count(1.0, 2),
              "resnet34 parameter total equals the closed-form oracle");
    }
}

// ---- 4: metrics vs. the published table ------------------------------------

// Integer confusion matrix with the positive class at exactly P = a/100,
// R = b/100: TP = ab, FP = (100-a)b, FN = a(100-b).
double f1_for(int a, int b) {
    const std::int64_t cm[2][2] = {{1000, (100 - a) * b}, {a * (100 - b), a * b}};
    return precision_recall_f1(cm)[1].f1;
}

void criterion_metrics() {
    struct Pair {
        const char* label;
        int p, r;          // percent
        double reported_f1;
    };
    const Pair pairs[] = {
        {"vgg16 organic", 86, 92, 0.89},     {"vgg16 recyclable", 89, 81, 0.85},
        {"resnet34 organic", 94, 93, 0.94},  {"resnet34 recyclable", 92, 91, 0.93},
        {"proposed organic", 96, 94, 0.95},  {"proposed recyclable", 95, 96, 0.94},
    };
    for (const Pair& p : pairs) {
        const double f1 = f1_for(p.p, p.r);
        check(std::abs(f1 - p.reported_f1) <= 0.005,
              std::string(p.label) + fmt(": F1 %.5f vs reported %.2f (tol 0.005)",
                                         f1, p.reported_f1));
    }

    // support-weighted recall over the published test supports (1401 / 1112)
    const double s0 = 1401.0, s1 = 1112.0;
    auto weighted = [&](double r0, double r1) { return (s0 * r0 + s1 * r1) / (s0 + s1); };
    const double prop = weighted(0.94, 0.96);
    check(std::abs(prop - 0.9496) <= 0.01,
          fmt("proposed accuracy %.5f vs reported 0.9496 (tol 0.01)", prop));
    const double resnet = weighted(0.93, 0.91);
    check(std::abs(resnet - 0.918) <= 0.01,
          fmt("resnet34 accuracy %.5f vs reported 0.918 (tol 0.01)", resnet));
    const double vgg = weighted(0.92, 0.81);
    check(std::abs(vgg - 0.9337) > 0.05,
          fmt("vgg16 accuracy %.5f vs reported 0.9337: known inconsistency > 0.05", vgg));
}

// ---- 5: overfit oracle -----------------------------------------------------

void criterion_overfit() {
    const auto t0 = Clock::now();
    testsupport::TempDir dir("acc_overfit");
    testsupport::make_overfit_fixture(dir.path(), 32);
    const DatasetIndex idx = scan_dataset(dir.path(), Split::Train);

    ModelConfig mc;
    mc.arch = Arch::Proposed;
    mc.input_extent = 32;
    mc.width_scale = 0.25;
    Model model = build_model(mc);
    init_params(model, 7);

    std::vector<int> all(idx.entries.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const Batch batch = load_batch(idx, all, 32);

    OptimizerState opt(0.05, 0.9);
    const auto params = model.params();
    int reached = -1;
    for (int epoch = 1; epoch <= 200; ++epoch) {
        const Tensor logits = model.forward_logits(batch.images, Mode::Train);
        int correct = 0;
        for (int r = 0; r < logits.shape()[0]; ++r)
            if ((logits.at(r, 0) >= 0.0 ? 1 : 0) == static_cast<int>(batch.labels[r])) ++correct;
        if (correct == logits.shape()[0]) {
            reached = epoch;
            break;
        }
        const LossValue loss = binary_cross_entropy(logits, batch.labels);
        model.backward_from_logits(loss.grad);
        sgd_step(params, opt);
    }
    check(reached > 0, reached > 0
                           ? "100% train accuracy on the 8-image fixture at epoch " +
                                 std::to_string(reached)
                           : "100% train accuracy not reached within 200 epochs");
    const double dt = seconds_since(t0);
    check(dt < 120.0, fmt("runtime %.1fs < 120s", dt));
}

// ---- 6: desk-scale training ------------------------------------------------

void criterion_desk_scale() {
    const auto t0 = Clock::now();
    testsupport::TempDir dir("acc_desk");
    testsupport::make_synthetic_dataset(dir.path(), 250, 50, 64, 99);
    const DatasetIndex train_idx = scan_dataset(dir.path(), Split::Train);
    const DatasetIndex test_idx = scan_dataset(dir.path(), Split::Test);

    ModelConfig mc;
    mc.arch = Arch::Proposed;
    mc.input_extent = 64;
    mc.width_scale = 0.25;
    Model model = build_model(mc);
    init_params(model, 3);

    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 32;
    tc.learning_rate = 0.02;
    tc.momentum = 0.9;
    tc.early_stop_patience = 6;
    tc.validation_fraction = 0.1;
    tc.seed = 3;
    const TrainReport report = train(model, train_idx, tc);
    std::printf("  (info) stopped epoch %d, best epoch %d, best val acc %.3f\n",
                report.stopped_epoch, report.best_epoch,
                report.epochs[static_cast<size_t>(report.best_epoch - 1)].val_acc);

    const EvalReport ev = evaluate(model, test_idx, 32);
    check(ev.accuracy >= 0.90, fmt("test accuracy %.3f >= 0.90 within 30 epochs", ev.accuracy));
    const double dt = seconds_since(t0);
    check(dt < 600.0, fmt("runtime %.1fs < 600s", dt));
}

// ---- 7: early-stop rule ----------------------------------------------------

void criterion_early_stop() {
    struct Case {
        std::vector<double> accs;
        int patience, stopped, best;
    };
    const Case cases[] = {
        {{0.80, 0.85, 0.85, 0.85, 0.85}, 3, 4, 2},
        {{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.80, 0.80, 0.80}, 3, 9, 7},
        {{0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95}, 3, 10, 10},
        {{0.90, 0.80, 0.80, 0.80}, 3, 3, 1},
        {{0.50, 0.60, 0.60}, 1, 3, 2},
        {{0.50, 0.40}, 1, 2, 1},
        {{0.70, 0.70}, 2, 2, 1},
        {{0.80, 0.80 + 1e-7, 0.80}, 3, 3, 1},
        {{0.80, 0.80 + 1e-5, 0.80, 0.80}, 3, 4, 2},
        {{0.80, 0.70, 0.90, 0.90, 0.90}, 3, 5, 3},
        {{0.80, 0.70, 0.70, 0.70, 0.70}, 4, 4, 1},
        {{0.80}, 3, 1, 1},
    };
    int i = 0;
    for (const Case& c : cases) {
        ++i;
        const EarlyStopResult r = simulate_early_stop(c.accs, c.patience);
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "case %d (patience %d): stopped %d/%d, best %d/%d", i, c.patience,
                      r.stopped_epoch, c.stopped, r.best_epoch, c.best);
        check(r.stopped_epoch == c.stopped && r.best_epoch == c.best, buf);
    }
}

// ---- 8: determinism of the train command -----------------------------------

void criterion_determinism() {
    const char* cli = std::getenv("WASTENET_CLI");
    if (!cli) {
        check(false, "WASTENET_CLI not set");
        return;
    }
    testsupport::TempDir dir("acc_det");
    const std::string data = dir.path() + "/data";
    testsupport::make_counted_tree(data, 8, 8, 2, 2);

    auto run = [&](const std::string& run_id) {
        const std::string cmd = std::string("\"") + cli + "\" train --data " + data +
                                " --out " + dir.path() + "/runs --run-id " + run_id +
                                " --arch proposed --input 16 --width-scale 0.125 --batch 4" +
                                " --epochs 3 --lr 0.02 --seed 21 --val-fraction 0.25" +
                                " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    check(run("a") && run("b"), "both train runs exited cleanly");
    const std::string base = dir.path() + "/runs/";
    const std::string ck_a = slurp(base + "a/checkpoint.wgck");
    const std::string ck_b = slurp(base + "b/checkpoint.wgck");
    check(!ck_a.empty() && ck_a == ck_b, "checkpoints are bitwise identical");
    const std::string cv_a = slurp(base + "a/curves.csv");
    const std::string cv_b = slurp(base + "b/curves.csv");
    check(!cv_a.empty() && cv_a == cv_b, "curve CSVs are bitwise identical");
}

// ---- 9: checkpoint round trip ----------------------------------------------

void criterion_checkpoint_round_trip() {
    testsupport::TempDir dir("acc_ckpt");
    const std::string data = dir.path() + "/data";
    testsupport::make_counted_tree(data, 6, 6, 5, 5);
    const DatasetIndex train_idx = scan_dataset(data, Split::Train);
    const DatasetIndex test_idx = scan_dataset(data, Split::Test);

    ModelConfig mc;
    mc.arch = Arch::Proposed;
    mc.input_extent = 16;
    mc.width_scale = 0.125;
    Model model = build_model(mc);
    init_params(model, 8);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 4;
    tc.learning_rate = 0.02;
    tc.validation_fraction = 0.25;
    train(model, train_idx, tc);

    const EvalReport before = evaluate(model, test_idx, 4);
    const std::string path = dir.path() + "/model.wgck";
    save_checkpoint(model, path);
    Model loaded = load_checkpoint(path);
    const EvalReport after = evaluate(loaded, test_idx, 4);

    bool same_cm = true;
    for (int a = 0; a < 2; ++a)
        for (int p = 0; p < 2; ++p) same_cm = same_cm && before.cm[a][p] == after.cm[a][p];
    check(same_cm, "confusion matrix identical after save/load");
    check(before.accuracy == after.accuracy, "accuracy identical after save/load");
    bool same_metrics = true;
    for (int c = 0; c < 2; ++c)
        same_metrics = same_metrics &&
                       before.per_class[c].precision == after.per_class[c].precision &&
                       before.per_class[c].recall == after.per_class[c].recall &&
                       before.per_class[c].f1 == after.per_class[c].f1;
    check(same_metrics, "per-class metrics identical after save/load");
}

// ---- 10: dataset scan cross-sum --------------------------------------------

void criterion_dataset_scan() {
    // published per-class counts scaled down ~1:100, same cross-sum structure
    const int train_o = 126, train_r = 100, test_o = 14, test_r = 11;
    testsupport::TempDir dir("acc_scan");
    testsupport::make_counted_tree(dir.path(), train_o, train_r, test_o, test_r);

    const DatasetIndex tr = scan_dataset(dir.path(), Split::Train);
    const DatasetIndex te = scan_dataset(dir.path(), Split::Test);
    check(tr.count_organic == train_o && tr.count_recyclable == train_r,
          "train split counts exact");
    check(te.count_organic == test_o && te.count_recyclable == test_r,
          "test split counts exact");
    check(tr.count_organic + te.count_organic == train_o + test_o &&
              tr.count_recyclable + te.count_recyclable == train_r + test_r,
          "train + test = total per class");
    check(tr.entries.size() == static_cast<size_t>(train_o + train_r) &&
              te.entries.size() == static_cast<size_t>(test_o + test_r),
          "entry lists cover every file exactly once");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1-10>\n");
        return 2;
    }
    const int n = std::atoi(argv[1]);
    const char* names[11] = {"",
                             "gradient suite",
                             "conv oracle equivalence",
                             "architecture census",
                             "metrics vs published table",
                             "overfit oracle",
                             "desk-scale training",
                             "early-stop rule",
                             "train determinism",
                             "checkpoint round trip",
                             "dataset scan cross-sum"};
    if (n < 1 || n > 10) {
        std::fprintf(stderr, "usage: acceptance <criterion 1-10>\n");
        return 2;
    }
    std::printf("criterion %d: %s\n", n, names[n]);
    try {
        switch (n) {
            case 1: criterion_gradients(); break;
            case 2: criterion_conv_oracle(); break;
            case 3: criterion_census(); break;
            case 4: criterion_metrics(); break;
            case 5: criterion_overfit(); break;
            case 6: criterion_desk_scale(); break;
            case 7: criterion_early_stop(); break;
            case 8: criterion_determinism(); break;
            case 9: criterion_checkpoint_round_trip(); break;
            case 10: criterion_dataset_scan(); break;
        }
    } catch (const std::exception& e) {
        check(false, std::string("unexpected exception: ") + e.what());
    }
    std::printf("criterion %d: %s\n", n, g_ok ? "PASS" : "FAIL");
    return g_ok ? 0 : 1;
}
