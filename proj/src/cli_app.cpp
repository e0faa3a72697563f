#include "partclass/cli_app.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "partclass/checkpoint.hpp"
#include "partclass/error.hpp"
#include "partclass/train_eval.hpp"

namespace partclass {

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io_failure, "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(errc::io_failure, "short write to " + path.string());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"CAE part classifier: bulk-data meshes through GCN / FCNN / PointNet"};
    app.require_subcommand(1);
    int exit_code = 0;

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled part dataset");
    std::size_t gen_classes = 8;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--classes", gen_classes, "Number of part classes")->required();
    gen->add_option("--seed", gen_seed, "Sampling seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->callback([&]() {
        const DatasetManifest manifest = generate_dataset(gen_classes, gen_seed, gen_out);
        std::cout << "wrote " << manifest.entries.size() << " parts + manifest.csv to " << gen_out
                  << "\n";
    });

    // augment
    auto* aug = app.add_subcommand("augment", "Apply a transform descriptor to a mesh file");
    std::string aug_mesh, aug_transform, aug_out;
    aug->add_option("--mesh", aug_mesh, "Input mesh (.bdf)")->required();
    aug->add_option("--transform", aug_transform,
                    "Descriptor, e.g. 'scale(factor=1.05)' or 'holes(k=2,radius=7.5)#42'")
        ->required();
    aug->add_option("--out", aug_out, "Output mesh path")->required();
    aug->callback([&]() {
        const Mesh mesh = read_mesh_file(aug_mesh);
        std::optional<PartSpec> spec;
        try {
            spec = load_spec_sidecar(aug_mesh);
        } catch (const Error& e) {
            if (e.code() != std::string(errc::missing_spec_sidecar)) throw;
        }
        const TransformDesc desc = TransformDesc::parse(aug_transform);
        write_mesh_file(apply_descriptor(mesh, spec, desc), aug_out);
        std::cout << "wrote " << aug_out << "\n";
    });

    // train
    auto* tr = app.add_subcommand("train", "Train a classifier on a dataset manifest");
    std::string tr_arch, tr_manifest, tr_out, tr_history, tr_optimizer = "adam";
    TrainConfig tr_cfg;
    double tr_stop_acc = -1.0;
    bool tr_no_shuffle = false;
    tr->add_option("--arch", tr_arch, "gcn | fcnn | pointnet")
        ->required()
        ->check(CLI::IsMember({"gcn", "fcnn", "pointnet"}));
    tr->add_option("--manifest", tr_manifest, "Dataset manifest.csv")->required();
    tr->add_option("--epochs", tr_cfg.epochs, "Training epochs");
    tr->add_option("--seed", tr_cfg.seed, "Init/shuffle/dropout seed");
    tr->add_option("--out", tr_out, "Checkpoint output path")->required();
    tr->add_option("--lr", tr_cfg.adam.lr, "Learning rate");
    tr->add_option("--batch", tr_cfg.batch_size, "Parts per optimizer step");
    tr->add_option("--optimizer", tr_optimizer, "adam | sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    tr->add_option("--momentum", tr_cfg.sgd.momentum, "SGD momentum");
    tr->add_flag("--no-shuffle", tr_no_shuffle, "Keep manifest order every epoch");
    tr->add_option("--stop-train-acc", tr_stop_acc,
                   "Stop once training accuracy reaches this fraction");
    tr->add_option("--history", tr_history, "Write per-epoch CSV here");
    tr->callback([&]() {
        tr_cfg.arch = tr_arch;
        tr_cfg.optimizer = tr_optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
        tr_cfg.sgd.lr = tr_cfg.adam.lr;
        tr_cfg.shuffle = !tr_no_shuffle;
        if (tr_stop_acc >= 0.0) tr_cfg.stop_train_acc = tr_stop_acc;
        const DatasetManifest manifest = load_manifest_file(tr_manifest);
        TrainResult result = train(tr_cfg, manifest);
        save_checkpoint(tr_out, *result.model, result.meta);
        if (!tr_history.empty()) write_text_file(tr_history, history_csv(result.history));
        const EpochStats& last = result.history.back();
        std::printf("trained %s: %u epoch(s), final loss %.6f, train accuracy %.4f\n",
                    tr_arch.c_str(), result.meta.epochs, last.loss, last.train_accuracy);
        std::cout << "checkpoint: " << tr_out << "\n";
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate checkpoints on the variant suite");
    std::vector<std::string> ev_ckpts, ev_parts;
    std::string ev_manifest, ev_report;
    std::uint64_t ev_seed = 0;
    ev->add_option("--ckpt", ev_ckpts, "Checkpoint file (repeatable)")->required();
    ev->add_option("--manifest", ev_manifest, "Dataset manifest.csv")->required();
    ev->add_option("--part", ev_parts, "Base part name (repeatable)")->required();
    ev->add_option("--seed", ev_seed, "Suite generation seed");
    ev->add_option("--report", ev_report, "Write the markdown report here (default: stdout)");
    ev->callback([&]() {
        const DatasetManifest manifest = load_manifest_file(ev_manifest);
        std::vector<Variant> suite;
        for (const std::string& part : ev_parts) {
            const std::uint64_t part_seed = nd::mix_seed(ev_seed, manifest.find(part).label);
            std::vector<Variant> rows = build_variant_suite(manifest, part, part_seed);
            for (auto& v : rows) suite.push_back(std::move(v));
        }
        std::vector<EvalResult> results;
        for (const std::string& path : ev_ckpts) {
            LoadedCheckpoint ckpt = load_checkpoint(path);
            results.push_back(evaluate(*ckpt.model, suite));
        }
        const std::string text = report(results);
        if (ev_report.empty())
            std::cout << text;
        else
            write_text_file(ev_report, text);
    });

    // classify
    auto* cl = app.add_subcommand("classify", "Classify one mesh with a trained checkpoint");
    std::string cl_ckpt, cl_mesh;
    cl->add_option("--ckpt", cl_ckpt, "Checkpoint file")->required();
    cl->add_option("--mesh", cl_mesh, "Mesh file (.bdf)")->required();
    cl->callback([&]() {
        LoadedCheckpoint ckpt = load_checkpoint(cl_ckpt);
        const Mesh mesh = read_mesh_file(cl_mesh);
        const PartInput part = prepare_part(mesh);
        const Classification c = classify(*ckpt.model, part);
        std::printf("label=%zu p=%.7g name=%s\n", c.label, c.probability,
                    std::filesystem::path(cl_mesh).stem().string().c_str());
    });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    std::string gc_arch;
    double gc_tolerance = 1e-4;
    std::uint64_t gc_seed = 7;
    gc->add_option("--arch", gc_arch, "gcn | fcnn | pointnet")
        ->required()
        ->check(CLI::IsMember({"gcn", "fcnn", "pointnet"}));
    gc->add_option("--tolerance", gc_tolerance, "Max relative error allowed");
    gc->add_option("--seed", gc_seed, "Model/input seed");
    gc->callback([&]() {
        const nd::GradCheckReport report = model_gradcheck(gc_arch, gc_seed);
        std::cout << report.to_string();
        if (report.passed(gc_tolerance)) {
            std::cout << "PASS (tolerance " << gc_tolerance << ")\n";
        } else {
            std::cout << "FAIL (tolerance " << gc_tolerance << ")\n";
            exit_code = 1;
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}

}  // namespace partclass
