#include "tissuemix/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tissuemix/gradcheck.hpp"
#include "tissuemix/metrics.hpp"
#include "tissuemix/permutation.hpp"
#include "tissuemix/pipeline.hpp"
#include "tissuemix/pmap_io.hpp"
#include "tissuemix/png_io.hpp"
#include "tissuemix/tiling.hpp"

namespace tissuemix::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_number(const std::string& token, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    require(ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(v),
            where + ": '" + token + "' is not a number");
    return v;
}

std::vector<double> parse_scales(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_number(item, "--scales"));
    require(!out.empty(), "--scales needs at least one value");
    return out;
}

// Numbers separated by whitespace or commas; '#' starts a comment.
std::vector<std::vector<double>> read_number_rows(const fs::path& path) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(read_text(path));
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        line = line.substr(0, line.find('#'));
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::vector<double> row;
        for (std::string tok; fields >> tok;) {
            row.push_back(parse_number(tok, path.string() + " line " + std::to_string(line_no)));
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

int default_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Synth {
    fs::path manifest, out;
    pipeline::SynthOptions o;
    std::string strategy = "mosaic", filter = "none", classes;
};

void add_synth(CLI::App& app, Synth& s) {
    auto& o = s.o;
    o.threads = default_threads();
    app.add_option("--manifest", s.manifest, "Source dataset manifest (JSON Lines)")->required();
    app.add_option("--out", s.out, "Output directory")->required();
    app.add_option("--seed", o.synthesis.seed, "Global seed");
    app.add_option("--strategy", s.strategy, "mosaic or bezier");
    app.add_option("--count", o.count, "Samples to keep");
    app.add_option("--max-attempts", o.max_attempts, "Candidate limit (default 10 x count)");
    app.add_option("--filter", s.filter, "none, external or heuristic");
    app.add_option("--scores", o.scores, "Score CSV for --filter external");
    app.add_option("--threshold", o.threshold, "Keep samples scoring strictly above this");
    app.add_option("--classes", s.classes, "Comma-separated eligible source classes (default all)");
    app.add_option("--threads", o.threads, "Worker threads");
    app.add_option("--height", o.synthesis.out_height, "Output height");
    app.add_option("--width", o.synthesis.out_width, "Output width");
    app.add_option("--alpha", o.synthesis.alpha, "Lower anchor bound as a fraction of the size");
    app.add_option("--beta", o.synthesis.beta, "Upper anchor bound as a fraction of the size");
    app.add_option("--grid-order", o.synthesis.grid_order, "Tiles per grid side (m)");
    app.add_option("--anchors", o.synthesis.bezier_anchors, "Bezier loop segments (N)");
    app.add_option("--samples-per-segment", o.synthesis.samples_per_segment, "Polygon points per curve segment");
    app.add_option("--infer-background", o.infer_background, "Mark white pixels of mask-less sources as background");
    app.add_option("--reference-pool", o.reference_pool, "Manifest images used for heuristic statistics");
    app.add_option("--spot-checks", o.spot_checks, "Samples re-derived from recipes after the run");
    auto& p = o.synthesis.grid_policy;
    app.add_option("--grid-hflip-prob", p.hflip_prob, "Mosaic grid augmentation: horizontal flip probability");
    app.add_option("--grid-vflip-prob", p.vflip_prob, "Mosaic grid augmentation: vertical flip probability");
    app.add_option("--grid-max-shift", p.max_shift_frac, "Mosaic grid augmentation: max shift fraction");
    app.add_option("--grid-scale-min", p.scale_min, "Mosaic grid augmentation: min scale");
    app.add_option("--grid-scale-max", p.scale_max, "Mosaic grid augmentation: max scale");
    app.add_option("--grid-right-angle", p.right_angle_rotation, "Mosaic grid augmentation: quarter turns");
    app.add_option("--grid-max-rotation", p.max_rotation_deg, "Mosaic grid augmentation: max rotation (degrees)");
}

int do_synth(Synth& s, std::ostream& out, std::ostream& err) {
    s.o.strategy = parse_strategy(s.strategy);
    s.o.filter = pipeline::parse_filter_mode(s.filter);
    s.o.classes = split_list(s.classes);
    const auto summary = pipeline::run_synth(s.manifest, s.o, s.out, &err);
    for (const auto& w : summary.warnings) err << "warning: " << w << '\n';
    err << "synth: generated " << summary.attempts << ", kept " << summary.kept << ", discarded "
        << summary.discarded;
    if (summary.unscored) err << " (" << summary.unscored << " unscored)";
    err << ", attempts " << summary.attempts << ", spot-checked " << summary.spot_checked << '\n';
    ordered_json j;
    j["out"] = s.out.string();
    j["strategy"] = s.strategy;
    j["attempts"] = summary.attempts;
    j["kept"] = summary.kept;
    j["discarded"] = summary.discarded;
    j["unscored"] = summary.unscored;
    j["spot_checked"] = summary.spot_checked;
    j["reached_target"] = summary.reached_target;
    out << j.dump() << '\n';
    if (!summary.reached_target) {
        err << "error: kept " << summary.kept << " of " << s.o.count << " samples after " << summary.attempts
            << " attempts\n";
        return 2;
    }
    return 0;
}

struct Replay {
    fs::path run;
    std::vector<std::string> ids;
    int threads = default_threads();
};

int do_replay(const Replay& r, std::ostream& out, std::ostream& err) {
    const auto results = pipeline::replay_run(r.run, r.ids, r.threads);
    ordered_json j;
    std::vector<std::string> bad;
    for (const auto& x : results)
        if (!x.matches) bad.push_back(x.id);
    j["checked"] = results.size();
    j["matched"] = results.size() - bad.size();
    j["mismatched"] = bad;
    out << j.dump() << '\n';
    err << "replay: " << results.size() - bad.size() << "/" << results.size() << " samples match their recipes\n";
    return bad.empty() ? 0 : 2;
}

struct Eval {
    fs::path pred, gt, classes, images, report;
    int background = kDefaultBackground;
    int bg_threshold = metrics::kBackgroundColorThreshold;
};

int do_eval(const Eval& e, std::ostream& out, std::ostream& err) {
    std::vector<std::string> names;
    {
        std::istringstream in(read_text(e.classes));
        for (std::string line; std::getline(in, line);)
            if (!trim(line).empty()) names.push_back(trim(line));
    }
    require(!names.empty(), "class file " + e.classes.string() + " lists no classes");
    require(e.background >= static_cast<int>(names.size()) && e.background <= 255,
            "background index must be in [class count, 255]");
    const auto bg = static_cast<std::uint8_t>(e.background);
    const auto gts = list_files(e.gt, ".png");
    require(!gts.empty(), "no ground-truth masks (*.png) in " + e.gt.string());

    metrics::ConfusionMatrix cm(static_cast<int>(names.size()));
    for (const auto& g : gts) {
        const auto p = e.pred / g.filename();
        if (!fs::exists(p)) throw IoError("missing prediction for " + g.filename().string() + ": " + p.string());
        auto gt = io::read_mask(g, static_cast<int>(names.size()), bg);
        if (!e.images.empty()) {
            const auto img_path = e.images / g.filename();
            if (!fs::exists(img_path)) throw IoError("missing image for " + g.filename().string() + ": " + img_path.string());
            gt = metrics::mark_background(gt, io::read_image(img_path), e.bg_threshold);
        }
        const auto pred = io::read_mask(p, static_cast<int>(names.size()), bg);
        try {
            cm.add(pred, gt);
        } catch (const InvalidArgument& ex) {
            fail(g.filename().string() + ": " + ex.what());
        }
    }
    const auto report = metrics::compute_report(cm);
    const auto json = metrics::report_to_json(report, names);
    if (!e.report.empty()) {
        std::ofstream f(e.report, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + e.report.string());
        f << json << '\n';
    }
    out << json << '\n';
    err << "eval: " << gts.size() << " masks, mIoU " << report.miou << ", fwIoU " << report.fwiou << '\n';
    return 0;
}

struct Perm {
    std::vector<fs::path> files;
    fs::path columns;
    metrics::PermutationOptions o;
};

int do_permtest(const Perm& p, std::ostream& out) {
    std::vector<double> a, b;
    if (!p.columns.empty()) {
        require(p.files.empty(), "give either --columns or two group files");
        for (const auto& row : read_number_rows(p.columns)) {
            require(row.size() == 2, p.columns.string() + ": every row needs exactly two numbers");
            a.push_back(row[0]);
            b.push_back(row[1]);
        }
    } else {
        require(p.files.size() == 2, "permtest needs two group files or --columns");
        for (int g = 0; g < 2; ++g)
            for (const auto& row : read_number_rows(p.files[static_cast<std::size_t>(g)]))
                (g == 0 ? a : b).insert((g == 0 ? a : b).end(), row.begin(), row.end());
    }
    const auto r = metrics::permutation_test(a, b, p.o);
    ordered_json j;
    j["p_value"] = r.p_value;
    j["statistic"] = r.statistic;
    j["exact"] = r.exact;
    j["permutations"] = r.permutations;
    j["n_a"] = a.size();
    j["n_b"] = b.size();
    out << j.dump() << '\n';
    return 0;
}

int do_losscheck(std::uint64_t seed, int trials, std::ostream& out) {
    const auto results = losses::run_gradient_checks(seed, trials);
    bool all = true;
    out << std::left << std::setw(30) << "check" << std::setw(8) << "trials" << std::setw(14) << "max_rel_err"
        << std::setw(11) << "tolerance" << "result\n";
    for (const auto& r : results) {
        all = all && r.passed;
        std::ostringstream e, t;
        e << std::scientific << std::setprecision(3) << r.max_rel_error;
        t << std::scientific << std::setprecision(1) << r.tolerance;
        out << std::left << std::setw(30) << r.name << std::setw(8) << r.trials << std::setw(14) << e.str()
            << std::setw(11) << t.str() << (r.passed ? "PASS" : "FAIL") << '\n';
    }
    return all ? 0 : 1;
}

struct Fuse {
    std::vector<fs::path> files;
    fs::path tiles, out;
    int height = 0, width = 0;
};

int do_fuse(const Fuse& f, std::ostream& out, std::ostream& err) {
    auto files = f.files;
    if (!f.tiles.empty()) {
        const auto listed = list_files(f.tiles, ".pmap");
        files.insert(files.end(), listed.begin(), listed.end());
    }
    require(!files.empty(), "no tile files given");
    std::vector<tiling::TileRecord> records;
    std::set<double> scales;
    for (const auto& p : files) {
        records.push_back(io::read_pmap(p));
        scales.insert(records.back().scale);
    }
    const auto fused = tiling::fuse_records(records, f.height, f.width);
    std::error_code ec;
    fs::create_directories(f.out, ec);
    if (ec) throw IoError("cannot create " + f.out.string() + ": " + ec.message());
    io::write_pmap(f.out / "fused.pmap", {1.0, {}, {}, fused});
    io::write_mask(f.out / "mask.png", tiling::argmax_mask(fused));
    ordered_json j;
    j["height"] = fused.height;
    j["width"] = fused.width;
    j["channels"] = fused.channels;
    j["records"] = records.size();
    j["scales"] = std::vector<double>(scales.begin(), scales.end());
    j["fused"] = (f.out / "fused.pmap").string();
    j["mask"] = (f.out / "mask.png").string();
    out << j.dump() << '\n';
    err << "fuse: " << records.size() << " tiles at " << scales.size() << " scale(s) -> " << fused.height << "x"
        << fused.width << '\n';
    return 0;
}

struct Plan {
    int height = 0, width = 0, window = tiling::kDefaultWindow;
    double overlap = 0.5;
    std::string tta = "d4", scales = "0.75,1,1.25";
};

int do_plan(const Plan& p, std::ostream& out) {
    const auto scales = parse_scales(p.scales);
    const auto plans = tiling::plan_inference(p.height, p.width, p.window, p.overlap, scales);
    ordered_json j;
    j["height"] = p.height;
    j["width"] = p.width;
    j["overlap"] = p.overlap;
    auto js = ordered_json::array();
    for (const auto& sp : plans) {
        ordered_json s;
        s["scale"] = sp.scale;
        s["height"] = sp.tiles.height;
        s["width"] = sp.tiles.width;
        s["window"] = sp.tiles.window;
        s["stride"] = sp.tiles.stride;
        auto w = ordered_json::array();
        for (const auto& win : sp.tiles.windows) w.push_back({win.row, win.col});
        s["windows"] = w;
        js.push_back(s);
    }
    j["scales"] = js;
    auto jv = ordered_json::array();
    for (const auto& v : tiling::variants(tiling::parse_tta_set(p.tta))) {
        jv.push_back({{"quarter_turns", v.quarter_turns}, {"hflip", v.hflip}});
    }
    j["tta"] = p.tta;
    j["variants"] = jv;
    out << j.dump() << '\n';
    return 0;
}

// Expands `--config FILE` into flags placed before the command-line flags,
// so explicit flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
    if (args.empty()) return args;
    std::vector<std::string> rest;
    fs::path config;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    std::vector<std::string> out{args[0]};
    if (!config.empty()) {
        const CLI::App* sub = nullptr;
        try {
            sub = app.get_subcommand(args[0]);
        } catch (const CLI::OptionNotFound&) {
            fail("unknown subcommand '" + args[0] + "'");
        }
        for (const auto& e : parse_config_text(read_text(config))) {
            std::string flag = e.key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            if (sub->get_option_no_throw("--" + flag) == nullptr) {
                fail(config.string() + " line " + std::to_string(e.line) + ": unknown key '" + e.key + "' for " +
                     args[0]);
            }
            out.push_back("--" + flag);
            out.push_back(e.value);
        }
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(const std::string& text) {
    std::vector<ConfigEntry> out;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "config line " + std::to_string(line_no) + ": expected key = value");
        ConfigEntry e{line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
        std::replace(e.key.begin(), e.key.end(), '-', '_');
        require(!e.key.empty(), "config line " + std::to_string(line_no) + ": empty key");
        require(seen.insert(e.key).second, "config line " + std::to_string(line_no) + ": duplicate key '" + e.key + "'");
        if (e.value.size() >= 2 && e.value.front() == '"' && e.value.back() == '"') e.value = e.value.substr(1, e.value.size() - 2);
        out.push_back(std::move(e));
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Synthesized histopathology training data, segmentation metrics and tiled inference fusion",
                 "tissuemix");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    // Loaded by expand_config; registered so it shows up in --help.
    auto add_config = [](CLI::App* sub) {
        sub->add_option("--config", "key = value file; flags given on the command line win");
    };

    Synth synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate, filter and write synthesized samples");
    add_synth(*synth_cmd, synth);
    add_config(synth_cmd);

    Replay replay;
    auto* replay_cmd = app.add_subcommand("replay", "Re-derive written samples from their recipes and compare");
    replay_cmd->add_option("--run", replay.run, "Output directory of a synth run")->required();
    replay_cmd->add_option("--id", replay.ids, "Sample id to check (repeatable; default all)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    replay_cmd->add_option("--threads", replay.threads, "Worker threads");
    add_config(replay_cmd);

    Eval eval;
    auto* eval_cmd = app.add_subcommand("eval", "IoU, mIoU and fwIoU of predicted masks against ground truth");
    eval_cmd->add_option("--pred", eval.pred, "Directory of predicted index masks")->required();
    eval_cmd->add_option("--gt", eval.gt, "Directory of ground-truth index masks")->required();
    eval_cmd->add_option("--classes", eval.classes, "Class names, one per line")->required();
    eval_cmd->add_option("--background", eval.background, "Background index");
    eval_cmd->add_option("--images", eval.images, "Ground-truth images for color-based background detection");
    eval_cmd->add_option("--bg-threshold", eval.bg_threshold, "min(R,G,B) at or above this is background");
    eval_cmd->add_option("--report", eval.report, "Also write the JSON report here");
    add_config(eval_cmd);

    Perm perm;
    auto* perm_cmd = app.add_subcommand("permtest", "Two-tailed permutation test on the difference of means");
    perm_cmd->add_option("groups", perm.files, "Two files of numbers (group a, group b)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    perm_cmd->add_option("--columns", perm.columns, "One file with two numeric columns");
    perm_cmd->add_option("--max-exact", perm.o.max_exact, "Enumerate exhaustively up to this many splits");
    perm_cmd->add_option("--iters", perm.o.mc_iters, "Monte Carlo permutations");
    perm_cmd->add_option("--seed", perm.o.seed, "Monte Carlo seed");
    add_config(perm_cmd);

    std::uint64_t check_seed = 0;
    int check_trials = 100;
    auto* loss_cmd = app.add_subcommand("losscheck", "Compare analytic loss gradients with finite differences");
    loss_cmd->add_option("--seed", check_seed, "Seed for the random inputs");
    loss_cmd->add_option("--trials", check_trials, "Random inputs per check");
    add_config(loss_cmd);

    Fuse fuse;
    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse tile, TTA and multiscale probability maps");
    fuse_cmd->add_option("files", fuse.files, "Tile probability files (.pmap)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    fuse_cmd->add_option("--tiles", fuse.tiles, "Directory of .pmap tiles");
    fuse_cmd->add_option("--height", fuse.height, "Original image height")->required();
    fuse_cmd->add_option("--width", fuse.width, "Original image width")->required();
    fuse_cmd->add_option("--out", fuse.out, "Output directory")->required();
    add_config(fuse_cmd);

    Plan plan;
    auto* plan_cmd = app.add_subcommand("plan", "List sliding windows, scales and TTA variants for an image");
    plan_cmd->add_option("--height", plan.height, "Image height")->required();
    plan_cmd->add_option("--width", plan.width, "Image width")->required();
    plan_cmd->add_option("--window", plan.window, "Window size");
    plan_cmd->add_option("--overlap", plan.overlap, "Window overlap fraction in [0, 1)");
    plan_cmd->add_option("--tta", plan.tta, "none, rot_flip or d4");
    plan_cmd->add_option("--scales", plan.scales, "Comma-separated scale factors");
    add_config(plan_cmd);

    try {
        auto expanded = expand_config(args, app);
        std::reverse(expanded.begin(), expanded.end());  // CLI11 consumes from the back
        try {
            app.parse(expanded);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                out << app.help();
                for (auto* sub : app.get_subcommands()) out << sub->help();
                return 0;
            }
            err << "error: " << e.what() << '\n';
            return 1;
        }
        if (synth_cmd->parsed()) return do_synth(synth, out, err);
        if (replay_cmd->parsed()) return do_replay(replay, out, err);
        if (eval_cmd->parsed()) return do_eval(eval, out, err);
        if (perm_cmd->parsed()) return do_permtest(perm, out);
        if (loss_cmd->parsed()) return do_losscheck(check_seed, check_trials, out);
        if (fuse_cmd->parsed()) return do_fuse(fuse, out, err);
        if (plan_cmd->parsed()) return do_plan(plan, out);
        return 1;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace tissuemix::cli
