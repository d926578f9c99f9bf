#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "bexp/cli.hpp"
#include "bexp/learning.hpp"
#include "bexp/synthetic.hpp"

namespace bexp::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

fs::path sibling(const fs::path& p, const std::string& ext) {
    fs::path out = p;
    out.replace_extension(ext);
    return out;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void require_finite(const ExpertModel& m) {
    for (const auto& t : m.templates) {
        for (double p : t.probs) {
            if (!std::isfinite(p)) throw DegenerateModel("non-finite template value");
        }
    }
}

Dataset as_dataset(std::vector<BinaryVector> records, Shape shape) {
    Dataset ds;
    ds.shape = shape;
    ds.records = std::move(records);
    return ds;
}

std::string placements_json(const std::vector<Placement>& ps, const TransformGrid& grid) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Placement& p : ps) {
        const TransformParams tp = grid.params(p.transform);
        arr.push_back({{"glyph", p.glyph}, {"shift_x", tp.shift_x}, {"shift_y", tp.shift_y}});
    }
    return arr.dump();
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenOpts {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string out;
    QuadrantModelCfg quad;
    SceneCfg scene;
    BarLetterCfg bars;
    int width = 0, height = 0;
};

void gen_quadrant_cmd(const GenOpts& o) {
    QuadrantModelCfg cfg = o.quad;
    cfg.seed = o.seed;
    const QuadrantData qd = gen_quadrant(cfg, o.n);
    const fs::path out = o.out;
    write_dataset(out, as_dataset(qd.data, Shape{cfg.side, cfg.side}));
    write_model(sibling(out, ".truth.json"), quadrant_ground_truth_model(cfg.side));
}

void gen_bars_cmd(const GenOpts& o) {
    BarLetterCfg cfg = o.bars;
    cfg.seed = o.seed;
    cfg.canvas = {o.height, o.width};
    const BarData bd = gen_bars(cfg, o.n);
    ExpertModel truth;
    truth.rule = RuleKind::of(Rule::Max);
    truth.grid = bars_grid(cfg);
    for (const auto& g : bd.ground_truth) truth.add_expert(g);
    const fs::path out = o.out;
    write_dataset(out, as_dataset(bd.data, cfg.canvas));
    write_model(sibling(out, ".truth.json"), truth);
}

void gen_scene_cmd(const GenOpts& o) {
    SceneCfg cfg = o.scene;
    cfg.canvas = {o.height, o.width};
    std::vector<BinaryVector> clean, noisy;
    std::string truth = "[\n";
    for (std::size_t i = 0; i < o.n; ++i) {
        cfg.seed = o.seed + i;
        const Scene s = gen_scene(cfg);
        clean.push_back(s.clean);
        noisy.push_back(s.noisy);
        truth += " {\"seed\": " + std::to_string(cfg.seed) + ", \"placements\": " + placements_json(s.truth, scene_grid(cfg)) +
                 "}" + (i + 1 < o.n ? "," : "") + "\n";
    }
    truth += "]\n";
    const fs::path out = o.out;
    write_dataset(out, as_dataset(std::move(noisy), cfg.canvas));
    write_dataset(sibling(out, ".clean.bed"), as_dataset(std::move(clean), cfg.canvas));
    write_file_atomic(sibling(out, ".truth.json"), truth);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string data, out, init_from, rule = "maxminusmin", mode = "batch";
    double q = 0.5;
    TrainConfig cfg;
    int grid_shift = 0, grid_step = 1;
    std::vector<double> rotations{0.0};
    bool fit_geometry = false;
};

void train_cmd(const TrainOpts& o, std::ostream& out, std::ostream& err) {
    const Dataset ds = read_dataset(o.data);
    TrainConfig cfg = o.cfg;
    cfg.rule = {parse_rule(o.rule), o.q};
    cfg.grid = TransformGrid::shifts(o.grid_shift, o.grid_step, o.rotations);
    cfg.validate();

    ExpertModel model;
    if (o.mode == "batch") {
        std::optional<ExpertModel> init;
        if (!o.init_from.empty()) {
            init = read_model(o.init_from);
            if (init->dim() != ds.shape.size()) throw UsageError("--init-from model does not match the data");
        }
        const BatchResult res = train_batch(ds.records, cfg, std::move(init));
        out << "epoch\tmean_loglik\n";
        for (std::size_t e = 0; e < res.mean_loglik.size(); ++e) out << e << '\t' << num(res.mean_loglik[e]) << '\n';
        model = res.model;
    } else if (o.mode == "online") {
        if (!o.init_from.empty()) throw UsageError("--init-from only applies to batch mode");
        const OnlineResult res = train_online(ds.records, cfg);
        out << "example\texperts\tloglik_per_pixel\tspawned\n";
        for (const OnlineStep& s : res.steps) {
            out << s.index << '\t' << s.experts << '\t' << num(s.loglik_per_pixel) << '\t' << (s.spawned ? 1 : 0) << '\n';
        }
        model = res.model;
    } else {
        throw UsageError("--mode must be batch or online");
    }
    require_finite(model);

    if (o.fit_geometry) {
        const auto reps = e_step(model, ds.records);
        try {
            model.geometry = bexp::fit_geometry(reps, model.grid, model.size());
        } catch (const std::invalid_argument& e) {
            err << "warning: geometry not fitted: " << e.what() << '\n';
        }
    }
    write_model(o.out, model);
}

// ---------------------------------------------------------------------------
// infer / eval
// ---------------------------------------------------------------------------

InferOptions infer_options(const std::string& robustify, std::size_t max_picks) {
    InferOptions opts;
    if (robustify == "on") {
        opts.robustify_first = true;
    } else if (robustify == "off") {
        opts.robustify_first = false;
    } else if (robustify != "auto") {
        throw UsageError("--robustify must be on, off or auto");
    }
    opts.max_picks = max_picks;
    return opts;
}

void check_dims(const ExpertModel& m, const Dataset& ds) {
    if (m.dim() != ds.shape.size()) {
        throw UsageError("dataset dimension " + std::to_string(ds.shape.size()) + " does not match model dimension " +
                         std::to_string(m.dim()));
    }
}

void infer_cmd(const std::string& model_path, const std::string& data_path, const std::string& out_path,
               const InferOptions& opts) {
    const ExpertModel m = read_model(model_path);
    const Dataset ds = read_dataset(data_path);
    check_dims(m, ds);
    write_file_atomic(out_path, format_representations(e_step(m, ds.records, opts)));
}

void eval_cmd(const std::string& model_path, const std::string& data_path, std::ostream& out) {
    const ExpertModel m = read_model(model_path);
    const Dataset ds = read_dataset(data_path);
    check_dims(m, ds);
    if (ds.records.empty()) throw UsageError("empty dataset");
    const auto reps = e_step(m, ds.records);
    std::vector<double> nll;
    for (const auto& r : reps) nll.push_back(-r.loglik);
    // Summing in sorted order keeps the report independent of record order.
    std::sort(nll.begin(), nll.end());
    double total = 0.0;
    for (double v : nll) total += v;
    const double per_image = total / static_cast<double>(nll.size());
    if (!std::isfinite(per_image)) throw DegenerateModel("non-finite cross-entropy");
    out << "n\tnats_per_image\tnats_per_pixel\n"
        << nll.size() << '\t' << num(per_image) << '\t' << num(per_image / static_cast<double>(m.dim())) << '\n';
}

// ---------------------------------------------------------------------------
// sample / render / landscape / scene-demo
// ---------------------------------------------------------------------------

std::string index_name(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, i);
    return buf;
}

void sample_cmd(const std::string& model_path, std::size_t n, std::uint64_t seed, const std::string& dir) {
    const ExpertModel m = read_model(model_path);
    if (!m.geometry) throw UsageError("model has no fitted geometry; train with --fit-geometry");
    if (!m.shape().is_image()) throw UsageError("sampling needs image-shaped templates");
    make_dir(dir);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const auto params = draw_geometry(*m.geometry, rng);
        const auto picks = snap_configuration(params, m.grid);
        const auto mu = composed_template(m, picks);
        std::string ext;
        const std::string img = encode_template(m.rule, m.shape(), mu, ext);
        write_file_atomic(fs::path(dir) / (index_name("sample", i) + ext), img);
    }
}

void render_cmd(const std::string& model_path, const std::string& dir) {
    const ExpertModel m = read_model(model_path);
    if (!m.shape().is_image()) throw UsageError("rendering needs image-shaped templates");
    make_dir(dir);
    for (std::size_t k = 0; k < m.size(); ++k) {
        std::string ext;
        const std::string img = encode_template(m.rule, m.shape(), m.templates[k].probs, ext);
        write_file_atomic(fs::path(dir) / (index_name("expert", k) + ext), img);
    }
}

void landscape_cmd(const std::string& rule, double q, double step, const std::string& out_path, std::ostream& out) {
    if (!(step > 0.0 && step <= 0.1)) throw UsageError("--step must lie in (0, 0.1]");
    const RuleKind rk{parse_rule(rule), q};
    rk.validate();
    const Landscape ls = landscape(rk, step);
    const std::size_t n = ls.axis.size();

    double lo = ls.values[0][0], hi = lo;
    std::string tsv;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            lo = std::min(lo, ls.values[i][j]);
            hi = std::max(hi, ls.values[i][j]);
            tsv += num(ls.values[i][j]);
            tsv += j + 1 < n ? '\t' : '\n';
        }
    }
    std::vector<double> scaled;
    scaled.reserve(n * n);
    for (const auto& row : ls.values) {
        for (double v : row) scaled.push_back(hi > lo ? (v - lo) / (hi - lo) : 0.0);
    }
    const Shape shape{static_cast<int>(n), static_cast<int>(n)};
    write_file_atomic(out_path, encode_pgm(shape, scaled));
    write_file_atomic(sibling(out_path, ".tsv"), tsv);

    out << "p1\tp2\tvalue\n";
    for (const auto& [i, j] : ls.argmax()) out << num(ls.axis[i]) << '\t' << num(ls.axis[j]) << '\t' << num(ls.values[i][j]) << '\n';
}

void scene_demo_cmd(const SceneCfg& cfg, const std::string& robustify, std::ostream& out) {
    if (robustify != "on" && robustify != "off") throw UsageError("--robustify must be on or off");
    const SceneDemo demo = scene_demo(cfg, robustify == "on");
    const TransformGrid grid = scene_grid(cfg);
    out << "glyph\tshift_x\tshift_y\tmatch\n";
    for (const Placement& p : demo.detected) {
        const TransformParams tp = grid.params(p.transform);
        const bool hit = std::find(demo.scene.truth.begin(), demo.scene.truth.end(), p) != demo.scene.truth.end();
        out << p.glyph << '\t' << tp.shift_x << '\t' << tp.shift_y << '\t' << (hit ? "yes" : "no") << '\n';
    }
    out << "recovered\t" << demo.recovered << '/' << demo.scene.truth.size() << '\n';
    out << "exact\t" << (demo.exact ? "yes" : "no") << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Compositional product-Bernoulli expert models", "bexp"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // gen
    GenOpts g;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen->require_subcommand(1);
    auto common_gen = [&](CLI::App* sc, std::size_t n_default, int w, int h) {
        g.n = n_default;
        sc->add_option("--n", g.n, "Number of records")->capture_default_str();
        sc->add_option("--seed", g.seed, "Random seed")->capture_default_str();
        sc->add_option("--out", g.out, "Output dataset (.bed)")->required();
        if (w > 0) {
            sc->add_option("--width", g.width, "Canvas width")->default_val(w);
            sc->add_option("--height", g.height, "Canvas height")->default_val(h);
        }
    };
    auto* gq = gen->add_subcommand("quadrant", "Quadrant images; ground truth to <out>.truth.json");
    common_gen(gq, 100, 0, 0);
    gq->add_option("--side", g.quad.side)->capture_default_str();
    gq->add_option("--activation", g.quad.activation_prob)->capture_default_str();
    gq->add_option("--polarity", g.quad.polarity_prob)->capture_default_str();

    auto* gs = gen->add_subcommand("scene", "Noisy glyph scenes; clean copies and placements as sidecars");
    gs->add_option("--n", g.n, "Number of scenes")->default_val(1);
    gs->add_option("--seed", g.seed, "Seed of the first scene; scene i uses seed + i")->capture_default_str();
    gs->add_option("--out", g.out, "Output dataset (.bed)")->required();
    gs->add_option("--width", g.width)->default_val(g.scene.canvas.width);
    gs->add_option("--height", g.height)->default_val(g.scene.canvas.height);
    gs->add_option("--count", g.scene.count, "Glyphs per scene")->capture_default_str();
    gs->add_option("--noise", g.scene.flip_noise, "Pixel flip probability")->capture_default_str();

    auto* gb = gen->add_subcommand("bars", "Two-bar letters; ground truth to <out>.truth.json");
    common_gen(gb, 10, g.bars.canvas.width, g.bars.canvas.height);
    gb->add_option("--length", g.bars.bar_length)->capture_default_str();
    gb->add_option("--thickness", g.bars.bar_thickness)->capture_default_str();
    gb->add_option("--max-shift", g.bars.max_shift)->capture_default_str();
    gb->add_option("--max-rotation", g.bars.max_rotation)->capture_default_str();
    gb->add_option("--ink", g.bars.ink_prob)->capture_default_str();
    gb->add_option("--background", g.bars.background_prob)->capture_default_str();

    // train
    TrainOpts t;
    auto* tr = app.add_subcommand("train", "Learn experts from a dataset");
    tr->add_option("--data", t.data)->required();
    tr->add_option("--out", t.out)->required();
    tr->add_option("--rule", t.rule)->capture_default_str();
    tr->add_option("--q", t.q, "Abstention level of maxminusmin")->capture_default_str();
    tr->add_option("--mode", t.mode, "batch or online")->capture_default_str();
    tr->add_option("--k-max", t.cfg.k_max)->capture_default_str();
    tr->add_option("--epochs", t.cfg.epochs)->capture_default_str();
    tr->add_option("--epsilon", t.cfg.epsilon)->capture_default_str();
    tr->add_option("--theta-add", t.cfg.theta_add, "Spawn threshold, nats/pixel")->capture_default_str();
    tr->add_option("--seed", t.cfg.seed)->capture_default_str();
    tr->add_option("--init-from", t.init_from, "Initial model for batch mode");
    tr->add_option("--init-low", t.cfg.init_low)->capture_default_str();
    tr->add_option("--init-high", t.cfg.init_high)->capture_default_str();
    tr->add_flag("--strict-update", t.cfg.strict_update, "Reset unassigned cells to the prior mean");
    tr->add_option("--max-init-explained", t.cfg.max_init_explained,
                   "Value of explained cells in a new write-black expert")
        ->capture_default_str();
    tr->add_option("--grid-shift", t.grid_shift, "Shift range +-S")->capture_default_str();
    tr->add_option("--grid-step", t.grid_step)->capture_default_str();
    tr->add_option("--grid-rotations", t.rotations, "Rotation angles in degrees")->delimiter(',');
    tr->add_flag("--fit-geometry", t.fit_geometry, "Fit the Gaussian over expert configurations");

    // infer
    std::string model_path, data_path, out_path, robustify = "auto";
    std::size_t max_picks = 0;
    auto* inf = app.add_subcommand("infer", "Likelihood matching pursuit on every record");
    inf->add_option("--model", model_path)->required();
    inf->add_option("--data", data_path)->required();
    inf->add_option("--out", out_path)->required();
    inf->add_option("--robustify", robustify, "auto, on or off")->capture_default_str();
    inf->add_option("--max-picks", max_picks, "0 selects the default")->capture_default_str();

    auto* ev = app.add_subcommand("eval", "Cross-entropy of a model on a dataset");
    ev->add_option("--model", model_path)->required();
    ev->add_option("--data", data_path)->required();

    std::size_t n_samples = 9;
    std::uint64_t seed = 0;
    auto* sm = app.add_subcommand("sample", "Composed templates at sampled configurations");
    sm->add_option("--model", model_path)->required();
    sm->add_option("--n", n_samples)->capture_default_str();
    sm->add_option("--seed", seed)->capture_default_str();
    sm->add_option("--out", out_path, "Output directory")->required();

    auto* rd = app.add_subcommand("render", "One image per expert");
    rd->add_option("--model", model_path)->required();
    rd->add_option("--out", out_path, "Output directory")->required();

    std::string rule = "maxminusmin";
    double q = 0.5, step = 0.01;
    auto* ls = app.add_subcommand("landscape", "Two-expert log-likelihood heatmap");
    ls->add_option("--rule", rule)->capture_default_str();
    ls->add_option("--q", q)->capture_default_str();
    ls->add_option("--step", step)->capture_default_str();
    ls->add_option("--out", out_path, "Heatmap (.pgm); the raw grid goes to the .tsv sibling")->required();

    SceneCfg scene;
    std::string scene_robustify = "on";
    auto* sd = app.add_subcommand("scene-demo", "Parse a generated scene against the glyph bank");
    sd->add_option("--noise", scene.flip_noise)->capture_default_str();
    sd->add_option("--seed", scene.seed)->capture_default_str();
    sd->add_option("--count", scene.count)->capture_default_str();
    sd->add_option("--width", scene.canvas.width)->capture_default_str();
    sd->add_option("--height", scene.canvas.height)->capture_default_str();
    sd->add_option("--robustify", scene_robustify, "on or off")->capture_default_str();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (gq->parsed()) gen_quadrant_cmd(g);
        else if (gs->parsed()) gen_scene_cmd(g);
        else if (gb->parsed()) gen_bars_cmd(g);
        else if (tr->parsed()) train_cmd(t, out, err);
        else if (inf->parsed()) infer_cmd(model_path, data_path, out_path, infer_options(robustify, max_picks));
        else if (ev->parsed()) eval_cmd(model_path, data_path, out);
        else if (sm->parsed()) sample_cmd(model_path, n_samples, seed, out_path);
        else if (rd->parsed()) render_cmd(model_path, out_path);
        else if (ls->parsed()) landscape_cmd(rule, q, step, out_path, out);
        else if (sd->parsed()) scene_demo_cmd(scene, scene_robustify, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const DegenerateModel& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

}  // namespace bexp::cli
