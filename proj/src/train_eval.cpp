#include "partclass/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "partclass/error.hpp"
#include "partclass/strfmt.hpp"

namespace partclass {

using nd::Rng;
using nd::Tape;
using nd::Tensor;

LoadedDataset load_dataset(const DatasetManifest& manifest) {
    if (manifest.entries.empty()) fail(errc::invalid_spec, "manifest has no entries");
    LoadedDataset ds;
    ds.num_classes = manifest.num_classes;
    ds.parts.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries) {
        const Mesh mesh = read_mesh_file(manifest.resolve(entry));
        const ValidationReport report = validate(mesh);
        if (!report.ok()) fail(errc::invalid_mesh, entry.name + ": " + report.to_string());
        ds.parts.push_back(prepare_part(mesh));
        ds.labels.push_back(entry.label);
        ds.max_part_nodes = std::max(ds.max_part_nodes, ds.parts.back().n_nodes());
    }
    return ds;
}

namespace {

std::unique_ptr<ClassifierModel> build_model(const TrainConfig& cfg, const LoadedDataset& ds) {
    // Padding target: largest part in the dataset times a 4x headroom factor,
    // so refined variants still fit at evaluation time.
    const std::size_t padded = ds.max_part_nodes * 4;
    if (cfg.arch == "gcn") {
        GcnConfig c = cfg.gcn.value_or(GcnConfig{});
        c.num_classes = ds.num_classes;
        return make_gcn(c);
    }
    if (cfg.arch == "fcnn") {
        FcnnConfig c = cfg.fcnn.value_or(FcnnConfig{});
        if (c.max_nodes == 0) c.max_nodes = padded;
        c.num_classes = ds.num_classes;
        return make_fcnn(c);
    }
    if (cfg.arch == "pointnet") {
        PointNetConfig c = cfg.pointnet.value_or(PointNetConfig{});
        if (c.max_nodes == 0) c.max_nodes = padded;
        c.num_classes = ds.num_classes;
        return make_pointnet(c);
    }
    fail(errc::invalid_spec, "unknown architecture '" + cfg.arch + "'");
}

std::size_t argmax(const Tensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

double inference_accuracy(ClassifierModel& model, const LoadedDataset& ds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.parts.size(); ++i)
        if (classify(model, ds.parts[i]).label == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.parts.size());
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const DatasetManifest& manifest) {
    if (cfg.epochs < 1) fail(errc::invalid_spec, "epochs must be >= 1");
    if (cfg.batch_size < 1) fail(errc::invalid_spec, "batch_size must be >= 1");
    if (cfg.arch == "pointnet" && cfg.batch_size < 2)
        fail(errc::invalid_batch, "batch_size must be >= 2 when batchnorm layers train");

    const LoadedDataset ds = load_dataset(manifest);
    TrainResult result;
    result.model = build_model(cfg, ds);

    Rng rng(cfg.seed);
    result.model->init_params(rng);

    const std::vector<nd::NamedTensor> params = result.model->parameters();
    std::optional<nd::AdamOptimizer> adam;
    std::optional<nd::SgdOptimizer> sgd;
    if (cfg.optimizer == OptimizerKind::adam)
        adam.emplace(params, cfg.adam);
    else
        sgd.emplace(params, cfg.sgd);

    std::vector<Tensor> grad_accum;
    grad_accum.reserve(params.size());
    for (const auto& p : params) grad_accum.emplace_back(p.tensor->shape());

    const std::size_t n_parts = ds.parts.size();
    std::vector<std::size_t> order(n_parts);
    for (std::size_t i = 0; i < n_parts; ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) order = rng.permutation(n_parts);

        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;

        for (std::size_t start = 0; start < n_parts; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n_parts - start);
            std::vector<const PartInput*> batch;
            batch.reserve(count);
            for (std::size_t k = 0; k < count; ++k)
                batch.push_back(&ds.parts[order[start + k]]);

            Tape tape;
            const std::vector<Tape::Id> logits =
                result.model->forward_batch(tape, batch, true, rng);

            Tape::Id loss_sum = 0;
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t idx = order[start + k];
                const Tape::Id loss = tape.cross_entropy(logits[k], ds.labels[idx]);
                const double loss_value = tape.value(loss)[0];
                if (!std::isfinite(loss_value))
                    fail(errc::diverged_loss, "non-finite loss at epoch " +
                                                  std::to_string(epoch) + ", part " +
                                                  manifest.entries[idx].name);
                epoch_loss += loss_value;
                if (argmax(tape.value(logits[k])) == ds.labels[idx]) ++epoch_correct;
                loss_sum = k == 0 ? loss : tape.add(loss_sum, loss);
            }
            const Tape::Id mean_loss =
                tape.scale(loss_sum, 1.0 / static_cast<double>(count));
            tape.backward(mean_loss);
            for (std::size_t p = 0; p < params.size(); ++p)
                grad_accum[p] = tape.grad(tape.leaf_id_of(*params[p].tensor));
            if (adam)
                adam->step(grad_accum);
            else
                sgd->step(grad_accum);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = epoch_loss / static_cast<double>(n_parts);
        stats.train_accuracy =
            static_cast<double>(epoch_correct) / static_cast<double>(n_parts);
        result.history.push_back(stats);

        // The running accuracy is measured with dropout/batch statistics
        // active, so it lags the model's real train-set accuracy; confirm
        // with an inference pass once the proxy gets close.
        if (cfg.stop_train_acc && stats.train_accuracy >= *cfg.stop_train_acc - 0.2 &&
            inference_accuracy(*result.model, ds) >= *cfg.stop_train_acc)
            break;

        if (cfg.lr_decay != 1.0) {
            if (adam)
                adam->set_lr(adam->lr() * cfg.lr_decay);
            else
                sgd->set_lr(sgd->lr() * cfg.lr_decay);
        }
    }

    result.meta.seed = cfg.seed;
    result.meta.epochs = static_cast<std::uint32_t>(result.history.size());
    result.meta.final_loss = result.history.back().loss;
    return result;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::string out = "epoch,loss,train_accuracy\n";
    for (const auto& row : history) {
        out += std::to_string(row.epoch);
        out += ',';
        out += format_double(row.loss);
        out += ',';
        out += format_double(row.train_accuracy);
        out += '\n';
    }
    return out;
}

// --- variant suite ----------------------------------------------------------

namespace {

struct SuiteRow {
    char subset;
    std::string display_suffix;
    TransformDesc desc;
};

TransformStep make_step(std::string kind,
                        std::vector<std::pair<std::string, std::string>> params,
                        std::optional<std::uint64_t> seed = std::nullopt) {
    TransformStep step;
    step.kind = std::move(kind);
    step.params = std::move(params);
    step.seed = seed;
    return step;
}

TransformDesc single(TransformStep step) {
    TransformDesc d;
    d.steps.push_back(std::move(step));
    return d;
}

// Picks the first feature index and shift direction that keeps the spec
// valid; scanned in deterministic order.
TransformStep pick_shift(const PartSpec& spec, FeatureKind kind, double dx_mm) {
    const std::size_t count = kind == FeatureKind::hole ? spec.holes.size() : spec.beads.size();
    const char* name = kind == FeatureKind::hole ? "hole_shift" : "bead_shift";
    if (count == 0)
        fail(errc::index_out_of_range,
             std::string(name) + " rows need at least one such feature on the base part");
    for (std::size_t index = 0; index < count; ++index) {
        for (const double dx : {dx_mm, -dx_mm}) {
            try {
                shift_feature(spec, kind, index, dx);
            } catch (const Error&) {
                continue;
            }
            return make_step(name, {{"index", std::to_string(index)}, {"dx", format_double(dx)}});
        }
    }
    fail(errc::feature_out_of_bounds,
         std::string(name) + " by " + format_double(dx_mm) + "mm fits no feature of the part");
}

std::string fmt_pct(double frac) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", frac * 100.0);
    return buf;
}

}  // namespace

std::vector<Variant> build_variant_suite(const DatasetManifest& manifest,
                                         std::string_view part_name, std::uint64_t seed) {
    const ManifestEntry& entry = manifest.find(part_name);
    const Mesh base = read_mesh_file(manifest.resolve(entry));
    const PartSpec spec = load_spec_sidecar(manifest.resolve(entry));
    Rng rng(seed);

    auto fd = [](double v) { return format_double(v); };
    std::vector<SuiteRow> rows;

    // Subset A: rigid motions.
    {
        const double tx = rng.uniform(-100.0, 100.0), ty = rng.uniform(-100.0, 100.0),
                     tz = rng.uniform(-100.0, 100.0);
        rows.push_back({'A', "translated",
                        single(make_step("translate", {{"x", fd(tx)}, {"y", fd(ty)}, {"z", fd(tz)}}))});

        auto random_axis = [&rng]() {
            double ax, ay, az, norm;
            do {
                ax = rng.normal();
                ay = rng.normal();
                az = rng.normal();
                norm = std::sqrt(ax * ax + ay * ay + az * az);
            } while (norm < 1e-6);
            return Vec3{ax / norm, ay / norm, az / norm};
        };
        const Vec3 axis = random_axis();
        const double angle = rng.uniform(0.5, 3.0);
        rows.push_back({'A', "rotated",
                        single(make_step("rotate", {{"ax", fd(axis.x)},
                                                    {"ay", fd(axis.y)},
                                                    {"az", fd(axis.z)},
                                                    {"angle", fd(angle)}}))});

        const Vec3 axis2 = random_axis();
        const double angle2 = rng.uniform(0.5, 3.0);
        const double tx2 = rng.uniform(-100.0, 100.0), ty2 = rng.uniform(-100.0, 100.0),
                     tz2 = rng.uniform(-100.0, 100.0);
        TransformDesc both;
        both.steps.push_back(make_step("rotate", {{"ax", fd(axis2.x)},
                                                  {"ay", fd(axis2.y)},
                                                  {"az", fd(axis2.z)},
                                                  {"angle", fd(angle2)}}));
        both.steps.push_back(
            make_step("translate", {{"x", fd(tx2)}, {"y", fd(ty2)}, {"z", fd(tz2)}}));
        rows.push_back({'A', "rotated + translated", std::move(both)});
    }

    // Subset B: holes, schema, refinement, coarsening.
    const double hole_radius = 0.06 * std::min(spec.width, spec.height);
    for (std::size_t k = 1; k <= 5; ++k) {
        rows.push_back(
            {'B',
             "with " + std::to_string(k) + " additional hole" + (k > 1 ? "s" : ""),
             single(make_step("holes", {{"k", std::to_string(k)}, {"radius", fd(hole_radius)}},
                              rng.fork_seed()))});
    }
    rows.push_back({'B', "with change in mesh schema", single(make_step("tri", {{"pattern", "fixed"}}))});
    rows.push_back({'B', "with finer mesh", single(make_step("refine", {}))});
    rows.push_back({'B', "with coarse mesh - I", single(make_step("coarsen", {{"factor", "2"}}))});
    rows.push_back({'B', "with coarse mesh - II", single(make_step("coarsen", {{"factor", "4"}}))});

    // Subset C: schema variants and mirroring.
    rows.push_back({'C', "with change in mesh schema - I",
                    single(make_step("tri", {{"pattern", "alternating"}}))});
    {
        TransformDesc refine_tri;
        refine_tri.steps.push_back(make_step("refine", {}));
        refine_tri.steps.push_back(make_step("tri", {{"pattern", "fixed"}}));
        rows.push_back({'C', "with change in mesh schema - II", std::move(refine_tri)});
    }
    rows.push_back({'C', "mirrored along y-axis", single(make_step("mirror", {{"axis", "y"}}))});
    rows.push_back({'C', "mirrored along x-axis", single(make_step("mirror", {{"axis", "x"}}))});

    // Subset D: scale-ups and feature shifts.
    for (const auto& [factor, pct] :
         {std::pair{"1.05", "5%"}, std::pair{"1.1", "10%"}, std::pair{"1.15", "15%"}}) {
        rows.push_back({'D', std::string("scale up by ") + pct,
                        single(make_step("scale", {{"factor", factor}}))});
    }
    for (const double dx : {5.0, 10.0, 15.0}) {
        rows.push_back({'D', "with " + fd(dx) + "mm hole shift",
                        single(pick_shift(spec, FeatureKind::hole, dx))});
    }
    for (const double dx : {5.0, 10.0, 15.0}) {
        rows.push_back({'D', "with " + fd(dx) + "mm bead shift",
                        single(pick_shift(spec, FeatureKind::bead, dx))});
    }

    // Subset E: node reordering.
    rows.push_back({'E', "change in mesh node ordering", single(make_step("permute", {}, rng.fork_seed()))});

    std::vector<Variant> suite;
    suite.reserve(rows.size());
    for (auto& row : rows) {
        Variant v;
        v.part_name = entry.name;
        v.label = entry.label;
        v.subset = row.subset;
        v.display = entry.name + " " + row.display_suffix;
        v.descriptor = row.desc.to_string();
        v.mesh = apply_descriptor(base, spec, row.desc);
        suite.push_back(std::move(v));
    }
    return suite;
}

std::vector<std::string> choose_suite_parts(const DatasetManifest& manifest, std::size_t k,
                                            std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<std::size_t> order = rng.permutation(manifest.entries.size());
    std::vector<std::string> chosen;
    for (const std::size_t idx : order) {
        if (chosen.size() == k) break;
        const ManifestEntry& entry = manifest.entries[idx];
        try {
            build_variant_suite(manifest, entry.name, nd::mix_seed(seed, entry.label));
        } catch (const Error&) {
            continue;  // no holes/beads or degenerate coarsening; not a baseline candidate
        }
        chosen.push_back(entry.name);
    }
    if (chosen.size() < k)
        fail(errc::invalid_spec, "only " + std::to_string(chosen.size()) + " of " +
                                     std::to_string(k) + " requested parts support the full suite");
    return chosen;
}

// --- evaluation and report ---------------------------------------------------

std::size_t EvalResult::correct_count() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += row.correct ? 1 : 0;
    return n;
}

double EvalResult::accuracy() const {
    return rows.empty() ? 0.0
                        : static_cast<double>(correct_count()) / static_cast<double>(rows.size());
}

EvalResult evaluate(ClassifierModel& model, const std::vector<Variant>& suite) {
    EvalResult result;
    result.arch = std::string(model.arch());
    result.rows.reserve(suite.size());
    for (const Variant& variant : suite) {
        EvalRow row;
        row.part_name = variant.part_name;
        row.subset = variant.subset;
        row.display = variant.display;
        row.descriptor = variant.descriptor;
        row.true_label = variant.label;
        try {
            const PartInput part = prepare_part(variant.mesh);
            const Classification c = classify(model, part);
            row.predicted = c.label;
            row.correct = c.label == variant.label;
        } catch (const Error& e) {
            if (e.code() != std::string(errc::part_too_large)) throw;
            row.correct = false;
            row.failure = e.what();
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string report(const std::vector<EvalResult>& results) {
    if (results.empty()) fail(errc::suite_mismatch, "no results to report");
    for (const auto& r : results) {
        if (r.rows.size() != results[0].rows.size())
            fail(errc::suite_mismatch, "result row counts differ");
        for (std::size_t i = 0; i < r.rows.size(); ++i)
            if (r.rows[i].descriptor != results[0].rows[i].descriptor ||
                r.rows[i].part_name != results[0].rows[i].part_name)
                fail(errc::suite_mismatch, "results cover different suites");
    }

    // Fixed column order FCNN, PointNet, GCN; anything else keeps input order.
    auto rank = [](const std::string& arch) {
        if (arch == "fcnn") return 0;
        if (arch == "pointnet") return 1;
        if (arch == "gcn") return 2;
        return 3;
    };
    std::vector<const EvalResult*> ordered;
    for (const auto& r : results) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&rank](const EvalResult* a, const EvalResult* b) {
                         return rank(a->arch) < rank(b->arch);
                     });

    auto arch_display = [](const std::string& arch) -> std::string {
        if (arch == "fcnn") return "Fully Connected Neural Network";
        if (arch == "pointnet") return "PointNet";
        if (arch == "gcn") return "Graph Convolutional Network (GCN)";
        return arch;
    };

    std::string out = "# Variant evaluation\n";
    for (const char subset : {'A', 'B', 'C', 'D', 'E'}) {
        bool any = false;
        for (const auto& row : results[0].rows) any = any || row.subset == subset;
        if (!any) continue;
        out += "\n## Test subset ";
        out += subset;
        out += "\n\n| Test part |";
        for (const auto* r : ordered) out += " " + arch_display(r->arch) + " |";
        out += "\n|---|";
        for (std::size_t i = 0; i < ordered.size(); ++i) out += "---|";
        out += "\n";
        for (std::size_t i = 0; i < results[0].rows.size(); ++i) {
            if (results[0].rows[i].subset != subset) continue;
            out += "| " + results[0].rows[i].display + " |";
            for (const auto* r : ordered)
                out += std::string(" ") + (r->rows[i].correct ? "✓" : "✗") + " |";
            out += "\n";
        }
    }
    out += "\n## Summary\n\n";
    for (const auto* r : ordered) {
        out += arch_display(r->arch) + ": accuracy: " + fmt_pct(r->accuracy()) + " (" +
               std::to_string(r->correct_count()) + "/" + std::to_string(r->rows.size()) + ")\n";
    }
    return out;
}

// --- model-level gradient check ----------------------------------------------

nd::GradCheckReport run_model_gradcheck(ClassifierModel& model, const PartInput& part,
                                        std::size_t label, std::uint64_t dropout_seed,
                                        double step) {
    // Snapshot batchnorm running statistics: every training-mode forward
    // mutates them, and the finite-difference sweep re-evaluates hundreds of
    // times.
    const std::vector<nd::NamedTensor> buffers = model.state_buffers();
    std::vector<Tensor> saved;
    saved.reserve(buffers.size());
    for (const auto& b : buffers) saved.push_back(*b.tensor);
    auto restore = [&]() {
        for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].tensor = saved[i];
    };

    auto loss_value = [&]() {
        Tape tape;
        Rng dropout_rng(dropout_seed);
        const Tape::Id logits = model.forward(tape, part, true, dropout_rng);
        const Tape::Id loss = tape.cross_entropy(logits, label);
        const double v = tape.value(loss)[0];
        restore();
        return v;
    };

    const std::vector<nd::NamedTensor> params = model.parameters();
    std::vector<Tensor> analytic;
    {
        Tape tape;
        Rng dropout_rng(dropout_seed);
        const Tape::Id logits = model.forward(tape, part, true, dropout_rng);
        const Tape::Id loss = tape.cross_entropy(logits, label);
        tape.backward(loss);
        for (const auto& p : params) analytic.push_back(tape.grad(tape.leaf_id_of(*p.tensor)));
        restore();
    }
    return nd::gradcheck(params, analytic, loss_value, step);
}

nd::GradCheckReport model_gradcheck(std::string_view arch, std::uint64_t seed) {
    // Toy part: a 4x3 plate with one bead so all three feature axes vary.
    PartSpec spec;
    spec.width = 40.0;
    spec.height = 30.0;
    spec.nx = 4;
    spec.ny = 3;
    spec.beads.push_back({8.0, 15.0, 32.0, 15.0, 6.0, 2.0});
    const Mesh mesh = generate_part(spec);
    const PartInput part = prepare_part(mesh);

    std::unique_ptr<ClassifierModel> model;
    if (arch == "gcn") {
        GcnConfig cfg;
        cfg.num_layers = 2;
        cfg.hidden_dim = 5;
        cfg.num_classes = 3;
        model = make_gcn(cfg);
    } else if (arch == "fcnn") {
        FcnnConfig cfg;
        cfg.max_nodes = 24;
        cfg.hidden_dims = {7, 5};
        cfg.num_classes = 3;
        model = make_fcnn(cfg);
    } else if (arch == "pointnet") {
        PointNetConfig cfg;
        cfg.max_nodes = 24;
        cfg.point_mlp_dims = {4, 6};
        cfg.head_dims = {5};
        cfg.num_classes = 3;
        model = make_pointnet(cfg);
    } else {
        fail(errc::invalid_spec, "unknown architecture '" + std::string(arch) + "'");
    }

    Rng rng(seed);
    model->init_params(rng);
    return run_model_gradcheck(*model, part, 1, nd::mix_seed(seed, 77));
}

}  // namespace partclass
