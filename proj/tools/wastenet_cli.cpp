#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wastenet/data.hpp"
#include "wastenet/loss.hpp"
#include "wastenet/model.hpp"
#include "wastenet/train.hpp"
#include "wastenet/verify.hpp"

namespace fs = std::filesystem;
using namespace wastenet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

struct CommonOpts {
    std::string arch = "proposed";
    int input_extent = 224;
    double width_scale = 1.0;
    std::string head = "auto";  // sigmoid1 | softmax2 | auto (per architecture)
};

ModelConfig model_config_from(const CommonOpts& o) {
    ModelConfig c;
    c.arch = arch_from_name(o.arch);
    c.input_extent = o.input_extent;
    c.width_scale = o.width_scale;
    if (o.head == "auto")
        c.head = c.arch == Arch::Proposed ? Head::Sigmoid1 : Head::Softmax2;
    else if (o.head == "sigmoid1")
        c.head = Head::Sigmoid1;
    else if (o.head == "softmax2")
        c.head = Head::Softmax2;
    else
        throw ConfigError("unknown head '" + o.head + "' (valid: sigmoid1, softmax2, auto)");
    return c;
}

std::string g_config_path;

void add_config_option(CLI::App* cmd) {
    cmd->add_option("--config", g_config_path,
                    "Flat key=value config file; command line overrides it");
}

// Fills in options from a flat key=value file, skipping anything the command
// line already set.
void apply_config(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not key=value: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt) throw ConfigError("unknown config key '" + key + "' in " + path);
        if (opt->count() > 0) continue;  // command line wins
        opt->add_result(value);
        opt->run_callback();
    }
}

void add_model_options(CLI::App* cmd, CommonOpts& o) {
    add_config_option(cmd);
    cmd->add_option("--arch", o.arch, "Architecture: proposed, vgg16, resnet34")
        ->capture_default_str();
    cmd->add_option("--input", o.input_extent, "Input extent (pixels)")->capture_default_str();
    cmd->add_option("--width-scale", o.width_scale, "Uniform layer-width multiplier")
        ->capture_default_str();
    cmd->add_option("--head", o.head, "Output head: sigmoid1, softmax2, auto")
        ->capture_default_str();
}

fs::path run_dir(const std::string& out, const std::string& run_id) {
    const fs::path dir = fs::path(out) / run_id;
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wastenet: organic/recyclable waste image classifier"};
    app.require_subcommand(1);

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "Train a model and write run artifacts");
    CommonOpts train_model;
    TrainConfig tc;
    std::string train_data, train_out = "runs", train_run_id = "run";
    add_model_options(train_cmd, train_model);
    train_cmd->add_option("--data", train_data, "Dataset root (TRAIN/{O,R}, TEST/{O,R})")
        ->required();
    train_cmd->add_option("--out", train_out, "Output directory")->capture_default_str();
    train_cmd->add_option("--run-id", train_run_id, "Run subdirectory name")
        ->capture_default_str();
    train_cmd->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str();
    train_cmd->add_option("--epochs", tc.epochs, "Max epochs")->capture_default_str();
    train_cmd->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str();
    train_cmd->add_option("--momentum", tc.momentum, "SGD momentum")->capture_default_str();
    train_cmd->add_option("--patience", tc.early_stop_patience, "Early-stop patience")
        ->capture_default_str();
    train_cmd->add_option("--val-fraction", tc.validation_fraction, "Validation fraction")
        ->capture_default_str();
    train_cmd->add_option("--seed", tc.seed, "Init/shuffle seed")->capture_default_str();

    // --- evaluate ---
    auto* eval_cmd = app.add_subcommand("evaluate", "Classification report on the test split");
    std::string eval_ckpt, eval_data, eval_out = "runs", eval_run_id = "run";
    int eval_batch = 64;
    add_config_option(eval_cmd);
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset root")->required();
    eval_cmd->add_option("--batch", eval_batch, "Batch size")->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "Output directory")->capture_default_str();
    eval_cmd->add_option("--run-id", eval_run_id, "Run subdirectory name")->capture_default_str();

    // --- predict ---
    auto* predict_cmd = app.add_subcommand("predict", "Classify a single image");
    std::string predict_ckpt, predict_image;
    add_config_option(predict_cmd);
    predict_cmd->add_option("--checkpoint", predict_ckpt, "Checkpoint path")->required();
    predict_cmd->add_option("image", predict_image, "Image file")->required();

    // --- gradcheck ---
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer");
    GradSuiteOptions gopts;
    grad_cmd->add_option("--eps", gopts.eps, "FD step")->capture_default_str();
    grad_cmd->add_option("--tolerance", gopts.tolerance, "Max relative error")
        ->capture_default_str();
    grad_cmd->add_option("--seed", gopts.seed, "Shape/value seed")->capture_default_str();
    grad_cmd->add_option("--inject-dense-fault", gopts.dense_backward_fault,
                         "Perturb Dense's analytic gradient (test hook)")
        ->group("");  // hidden

    // --- inspect ---
    auto* inspect_cmd = app.add_subcommand("inspect", "Print the layer table of an architecture");
    CommonOpts inspect_model;
    add_model_options(inspect_cmd, inspect_model);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!g_config_path.empty())
            for (CLI::App* sub : app.get_subcommands()) apply_config(sub, g_config_path);

        if (*train_cmd) {
            const ModelConfig mc = model_config_from(train_model);
            const DatasetIndex index = scan_dataset(train_data, Split::Train);
            for (const auto& w : index.warnings) std::cerr << "warning: " << w << "\n";

            Model model = build_model(mc);
            init_params(model, tc.seed);
            const fs::path dir = run_dir(train_out, train_run_id);

            {
                std::ostringstream cfg;
                cfg << "arch=" << train_model.arch << "\ninput=" << mc.input_extent
                    << "\nwidth-scale=" << mc.width_scale << "\nhead="
                    << (mc.head == Head::Sigmoid1 ? "sigmoid1" : "softmax2")
                    << "\ndata=" << train_data << "\nout=" << train_out
                    << "\nrun-id=" << train_run_id << "\nbatch=" << tc.batch_size
                    << "\nepochs=" << tc.epochs << "\nlr=" << tc.learning_rate
                    << "\nmomentum=" << tc.momentum << "\npatience=" << tc.early_stop_patience
                    << "\nval-fraction=" << tc.validation_fraction << "\nseed=" << tc.seed
                    << "\n";
                write_text(dir / "config.echo", cfg.str());
            }

            const TrainReport report = train(model, index, tc);
            save_checkpoint(model, (dir / "checkpoint.wgck").string());
            export_curves(report, (dir / "curves.csv").string());
            std::cout << "trained " << train_model.arch << ": stopped epoch "
                      << report.stopped_epoch << ", best epoch " << report.best_epoch
                      << ", best val acc "
                      << report.epochs[static_cast<size_t>(report.best_epoch - 1)].val_acc
                      << "\n"
                      << "artifacts in " << dir.string() << "\n";
            return kExitOk;
        }

        if (*eval_cmd) {
            Model model = load_checkpoint(eval_ckpt);
            const DatasetIndex index = scan_dataset(eval_data, Split::Test);
            if (index.entries.empty()) {
                std::cerr << "error: test split is empty under " << eval_data << "\n";
                return kExitUsage;
            }
            const EvalReport report = evaluate(model, index, eval_batch);
            const std::string text = format_eval_report(report);
            std::cout << text;
            write_text(run_dir(eval_out, eval_run_id) / "report.txt", text);
            return kExitOk;
        }

        if (*predict_cmd) {
            Model model = load_checkpoint(predict_ckpt);
            const Tensor img = load_image(predict_image, model.config().input_extent);
            const Tensor x = img.reshaped(Shape{1, img.shape()[0], img.shape()[1], img.shape()[2]});
            const Tensor probs = model.forward(x, Mode::Eval);
            const int cls = predict_class(model.head(), probs, 0);
            const double score =
                model.head() == Head::Sigmoid1 ? probs.at(0, 0) : probs.at(0, 1);
            std::printf("%s %.3f\n", cls == 1 ? "Recyclable" : "Organic", score);
            return kExitOk;
        }

        if (*grad_cmd) {
            const auto results = run_gradient_suite(gopts);
            std::printf("gradient suite: eps=%g, tolerance=%g\n", gopts.eps, gopts.tolerance);
            bool ok = true;
            for (const auto& r : results) {
                const bool pass = r.max_rel_error < gopts.tolerance;
                ok = ok && pass;
                std::printf("%-14s max rel error %.3e  %s\n", r.layer.c_str(), r.max_rel_error,
                            pass ? "ok" : "FAIL");
            }
            if (!ok) {
                std::cerr << "gradient check failed\n";
                return kExitVerifyFail;
            }
            return kExitOk;
        }

        if (*inspect_cmd) {
            Model model = build_model(model_config_from(inspect_model));
            std::printf("%-28s %-16s %12s\n", "layer", "output", "params");
            std::int64_t total = 0;
            for (const auto& row : model.summary()) {
                std::printf("%-28s %-16s %12lld\n", row.describe.c_str(),
                            row.out_shape.str().c_str(), static_cast<long long>(row.param_count));
                total += row.param_count;
            }
            std::printf("%-28s %-16s %12lld\n", "total", "", static_cast<long long>(total));
            return kExitOk;
        }
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
