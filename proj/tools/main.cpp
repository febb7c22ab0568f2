// Command-line front end: degrade, restore, benchmark, estimate-noise,
// curvature, make-kernel. Exit codes: 0 success, 2 usage error, 3 data
// error, 4 numeric failure.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pnpr/curvature.hpp"
#include "pnpr/degrade.hpp"
#include "pnpr/denoise.hpp"
#include "pnpr/engine.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"
#include "pnpr/image_io.hpp"
#include "pnpr/kernel.hpp"
#include "pnpr/manifest.hpp"
#include "pnpr/metrics.hpp"
#include "pnpr/nn/graph.hpp"
#include "pnpr/nn/weights.hpp"
#include "pnpr/noise_estimate.hpp"
#include "pnpr/spectral.hpp"

namespace fs = std::filesystem;
using namespace pnpr;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------- config file defaults ----------
// Grammar: one "key = value" per line, blank lines and '#' comments allowed.
// Values are spliced in front of the explicit arguments before parsing, so
// anything typed on the command line takes precedence.

std::vector<std::pair<std::string, std::string>> read_config_pairs(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("config: cannot open " + path);
    auto trim = [](const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        const std::string key = eq == std::string::npos ? "" : trim(t.substr(0, eq));
        const std::string value = eq == std::string::npos ? "" : trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw UsageError("config: line " + std::to_string(lineno) +
                             " is not 'key = value'");
        pairs.emplace_back(key, value);
    }
    return pairs;
}

bool config_flag_value(const std::string& key, const std::string& value) {
    std::string v;
    for (char c : value)
        v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError("config: '" + key + "' expects a boolean, got '" + value + "'");
}

std::vector<std::string> apply_config_defaults(const CLI::App* sub,
                                               const std::vector<std::string>& tail) {
    std::string path;
    std::set<const CLI::Option*> given;
    for (size_t i = 0; i < tail.size(); ++i) {
        const std::string& tok = tail[i];
        if (tok.rfind("--config=", 0) == 0) {
            path = tok.substr(9);
            continue;
        }
        if (tok == "--config") {
            if (i + 1 < tail.size()) path = tail[++i];
            continue;
        }
        if (tok.size() > 1 && tok[0] == '-') {
            if (const CLI::Option* o = sub->get_option_no_throw(tok.substr(0, tok.find('='))))
                given.insert(o);
            else if (tok[1] != '-')  // short option with glued value, e.g. -oout.png
                if (const CLI::Option* s = sub->get_option_no_throw(tok.substr(0, 2)))
                    given.insert(s);
        }
    }
    if (path.empty()) return tail;

    std::vector<std::string> merged;
    for (const auto& [key, value] : read_config_pairs(path)) {
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt) throw UsageError("config: unknown key '" + key + "'");
        if (given.count(opt)) continue;  // command line wins
        if (opt->get_type_size_max() == 0) {
            if (config_flag_value(key, value)) merged.push_back("--" + key);
        } else if (opt->get_expected_max() > 1) {
            std::istringstream vs(value);  // list option: split on whitespace
            std::string piece;
            while (vs >> piece) merged.push_back("--" + key + "=" + piece);
        } else {
            merged.push_back("--" + key + "=" + value);
        }
    }
    merged.insert(merged.end(), tail.begin(), tail.end());
    return merged;
}

// ---------- backend construction ----------

// Owns any CNN graphs referenced by the handles it builds.
struct Backends {
    std::optional<NetGraph> denoiser_graph;
    std::optional<NetGraph> estimator_graph;
    DenoiserHandle denoiser;
    NoiseEstimatorHandle estimator;
};

NetGraph load_denoiser_graph(const std::string& path) {
    const StoredCunetShape s = infer_cunet_shape(path);
    if (s.in_channels % 2 != 1)
        throw DataError("denoiser weights '" + path + "': input channels must be odd (2C+1)");
    NetGraph g = build_cunet_denoiser(s.widths, (s.in_channels - 1) / 2, s.blocks_per_scale);
    load_weights(g, path);
    return g;
}

NetGraph load_estimator_graph(const std::string& path) {
    const StoredCunetShape s = infer_cunet_shape(path);
    NetGraph g = build_cunet_estimator(s.widths, s.in_channels, s.blocks_per_scale);
    load_weights(g, path);
    return g;
}

// spec: "identity" | "tv" | "cnn" (with --weights) | "cnn:<path>"
void setup_denoiser(Backends& b, const std::string& spec, const std::string& weights_flag) {
    if (spec == "identity") {
        b.denoiser.backend = DenoiserHandle::Backend::Identity;
    } else if (spec == "tv") {
        b.denoiser.backend = DenoiserHandle::Backend::Tv;
    } else if (spec == "cnn" || spec.rfind("cnn:", 0) == 0) {
        std::string path = spec == "cnn" ? weights_flag : spec.substr(4);
        if (path.empty())
            throw UsageError("cnn denoiser needs a weight file: --denoiser cnn:<path> or --weights");
        b.denoiser_graph = load_denoiser_graph(path);
        b.denoiser.backend = DenoiserHandle::Backend::Cnn;
        b.denoiser.graph = &*b.denoiser_graph;
    } else {
        throw UsageError("unknown denoiser '" + spec + "' (identity|tv|cnn:<path>)");
    }
}

void setup_estimator(Backends& b, const std::string& spec) {
    if (spec == "mad") {
        b.estimator.backend = NoiseEstimatorHandle::Backend::MadHaar;
    } else if (spec.rfind("cnn:", 0) == 0) {
        b.estimator_graph = load_estimator_graph(spec.substr(4));
        b.estimator.backend = NoiseEstimatorHandle::Backend::Cnn;
        b.estimator.graph = &*b.estimator_graph;
    } else {
        throw UsageError("unknown estimator '" + spec + "' (mad|cnn:<path>)");
    }
}

// ---------- shared option block for restoration runs ----------

struct RestoreOpts {
    double lambda = 0.37;
    double rho = 1.0;
    int iters = 15;
    std::string stop = "rel";
    double rel_tol = 1e-4;
    std::string denoiser = "tv";
    std::string estimator = "mad";
    std::string weights;
    int crop_border = 0;
    CLI::Option* rho_opt = nullptr;
    CLI::Option* iters_opt = nullptr;
};

void add_restore_opts(CLI::App* cmd, RestoreOpts& o) {
    cmd->add_option("--lambda", o.lambda, "data term weight")->check(CLI::PositiveNumber);
    o.rho_opt = cmd->add_option("--rho", o.rho,
                                "denoiser level multiplier (default per task: 1 denoise, "
                                "1.2 deblur, 5/25/50 for scale 2/3/4)")
                    ->check(CLI::PositiveNumber);
    o.iters_opt = cmd->add_option("--iters", o.iters, "max outer iterations (default 15; 1 for denoise)")
                      ->check(CLI::PositiveNumber);
    cmd->add_option("--stop", o.stop, "stopping rule")
        ->check(CLI::IsMember({"rel", "psnr"}));
    cmd->add_option("--rel-tol", o.rel_tol, "relative-change stopping tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--denoiser", o.denoiser, "identity|tv|cnn:<weights>");
    cmd->add_option("--estimator", o.estimator, "mad|cnn:<weights>");
    cmd->add_option("--weights", o.weights, "weight file for --denoiser cnn");
    cmd->add_option("--crop-border", o.crop_border, "pixels to strip before metrics")
        ->check(CLI::NonNegativeNumber);
}

double default_rho(Task task, int scale) {
    switch (task) {
        case Task::Denoise: return 1.0;
        case Task::Deblur: return 1.2;
        case Task::Sisr: return scale == 2 ? 5.0 : (scale == 3 ? 25.0 : 50.0);
    }
    return 1.0;
}

PnPConfig make_config(const RestoreOpts& o, Task task, int scale, bool have_gt) {
    PnPConfig cfg;
    cfg.lambda = o.lambda;
    cfg.rho = o.rho_opt && o.rho_opt->count() ? o.rho : default_rho(task, scale);
    cfg.max_iters = o.iters_opt && o.iters_opt->count() ? o.iters
                                                        : (task == Task::Denoise ? 1 : 15);
    cfg.rel_tol = o.rel_tol;
    if (o.stop == "psnr") {
        if (!have_gt) throw UsageError("--stop psnr requires --gt");
        cfg.stop = PnPConfig::Stop::PsnrOracle;
    } else {
        cfg.stop = PnPConfig::Stop::RelChange;
    }
    return cfg;
}

// ---------- small utilities ----------

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

std::string fmt_psnr(double v) { return std::isinf(v) ? "inf" : fmt(v, 4); }

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Pads the clean image so SISR block structure holds; returns the padding.
Image prepare_clean(const Image& clean, const DegradationSpec& spec, int& pad_b, int& pad_r) {
    pad_b = pad_r = 0;
    if (spec.task != Task::Sisr) return clean;
    pad_b = (spec.scale - clean.height % spec.scale) % spec.scale;
    pad_r = (spec.scale - clean.width % spec.scale) % spec.scale;
    return pad_reflect_br(clean, pad_b, pad_r);
}

std::vector<fs::path> list_dataset(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw DataError("dataset '" + dir + "' is not a directory");
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("dataset '" + dir + "' contains no images");
    return files;
}

// ---------- subcommand: degrade ----------

struct DegradeArgs {
    std::string input, output, kernel, manifest, config;
    std::string task = "deblur";
    int scale = 2;
    double sigma = 0.0;
    uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs& a) {
    DegradationSpec spec;
    spec.task = parse_task(a.task);
    spec.scale = spec.task == Task::Sisr ? a.scale : 1;
    spec.sigma_s = a.sigma;
    spec.seed = a.seed;
    if (!a.kernel.empty()) {
        spec.kernel = load_kernel(a.kernel);
        spec.has_kernel = true;
    }
    spec.validate();

    const Image clean = load_image(a.input);
    int pad_b = 0, pad_r = 0;
    const Image padded = prepare_clean(clean, spec, pad_b, pad_r);
    const Image y = degrade(padded, spec);
    save_image(y, a.output);

    DegradeManifest m;
    m.task = spec.task;
    m.scale = spec.scale;
    m.sigma = spec.sigma_s;
    m.seed = spec.seed;
    m.kernel_path = a.kernel;
    if (spec.has_kernel) m.kernel_hash = kernel_hash(spec.kernel);
    m.source_path = a.input;
    m.orig_height = clean.height;
    m.orig_width = clean.width;
    m.pad_bottom = pad_b;
    m.pad_right = pad_r;
    save_manifest(m, a.manifest.empty() ? a.output + ".manifest" : a.manifest);
    return 0;
}

// ---------- subcommand: restore ----------

struct RestoreArgs {
    std::string input, output, manifest, gt, trace, config;
    std::string task;
    std::string kernel;
    int scale = 2;
    double sigma = -1.0;
    bool blind = false;
    RestoreOpts opts;
    CLI::Option* sigma_opt = nullptr;
    CLI::Option* task_opt = nullptr;
    CLI::Option* kernel_opt = nullptr;
    CLI::Option* scale_opt = nullptr;
};

int cmd_restore(const RestoreArgs& a) {
    if (a.sigma_opt->count() && a.blind)
        throw UsageError("--sigma (non-blind noise level) conflicts with --blind");

    DegradationSpec spec;
    std::optional<DegradeManifest> man;
    if (!a.manifest.empty()) {
        man = load_manifest(a.manifest);
        spec = manifest_to_spec(*man);
    } else {
        if (!a.task_opt->count())
            throw UsageError("restore needs --task or --manifest");
        spec.task = parse_task(a.task);
        spec.scale = spec.task == Task::Sisr ? a.scale : 1;
        spec.sigma_s = 0.0;
        if (!a.kernel.empty()) {
            spec.kernel = load_kernel(a.kernel);
            spec.has_kernel = true;
        }
        spec.validate();
    }
    // explicit flags override manifest fields
    if (man) {
        if (a.task_opt->count()) spec.task = parse_task(a.task);
        if (a.scale_opt->count() && spec.task == Task::Sisr) spec.scale = a.scale;
        if (a.kernel_opt->count()) {
            spec.kernel = load_kernel(a.kernel);
            spec.has_kernel = true;
        }
        spec.validate();
    }

    const Image y = load_image(a.input);
    std::optional<Image> gt;
    if (!a.gt.empty()) gt = load_image(a.gt);

    PnPConfig cfg = make_config(a.opts, spec.task, spec.scale, gt.has_value());
    if (a.sigma_opt->count()) cfg.sigma_s_override = a.sigma;

    Backends b;
    setup_denoiser(b, a.opts.denoiser, a.opts.weights);
    setup_estimator(b, a.opts.estimator);

    // Ground truth must match the working (padded) geometry inside the loop.
    std::optional<Image> gt_padded = gt;
    int pad_b = 0, pad_r = 0;
    if (man && spec.task == Task::Sisr) {
        pad_b = man->pad_bottom;
        pad_r = man->pad_right;
        if (gt && (pad_b || pad_r)) gt_padded = pad_reflect_br(*gt, pad_b, pad_r);
    }

    const RestoreResult res = run_restore(y, spec, b.estimator, b.denoiser, cfg,
                                          gt_padded ? &*gt_padded : nullptr);

    Image out = res.output;
    if (man && (pad_b || pad_r)) out = crop(out, 0, 0, man->orig_height, man->orig_width);
    save_image(out, a.output);

    if (!a.trace.empty()) {
        std::ofstream f(a.trace);
        if (!f) throw DataError("cannot open trace file '" + a.trace + "'");
        write_trace_csv(f, res.trace);
    }
    std::cout << "iters=" << res.iters_run << " sigma_s=" << fmt(res.sigma_s, 3);
    if (gt) {
        const MetricReport r = evaluate_metrics(out, *gt, a.opts.crop_border);
        std::cout << " psnr_rgb=" << fmt_psnr(r.psnr_rgb);
        if (r.psnr_y) std::cout << " psnr_y=" << fmt_psnr(*r.psnr_y);
        std::cout << " ssim=" << fmt(r.ssim_val);
    }
    std::cout << "\n";
    return 0;
}

// ---------- subcommand: benchmark ----------

struct BenchmarkArgs {
    std::string dataset, out_dir = "bench";
    std::string task = "deblur";
    std::string kernel, config;
    int scale = 2;
    std::vector<double> sigmas;
    uint64_t seed = 0;
    int jobs = 1;
    bool sweep = false;
    RestoreOpts opts;
};

struct BenchRow {
    std::string image;
    double sigma_true = 0.0, sigma_est = 0.0;
    double psnr_in = 0.0, psnr_out = 0.0, ssim_out = 0.0;
    double seconds = 0.0;
};

// One degrade+restore+measure pipeline; shared by cell and sweep modes.
BenchRow run_pipeline(const Image& clean, const fs::path& path, const DegradationSpec& spec0,
                      uint64_t seed, const Backends& b, const PnPConfig& cfg, int crop_border) {
    DegradationSpec spec = spec0;
    spec.seed = seed;
    int pad_b = 0, pad_r = 0;
    const Image padded = prepare_clean(clean, spec, pad_b, pad_r);
    const Image y = degrade(padded, spec);

    const auto t0 = std::chrono::steady_clock::now();
    const RestoreResult res = run_restore(y, spec, b.estimator, b.denoiser, cfg,
                                          cfg.stop == PnPConfig::Stop::PsnrOracle ? &padded
                                                                                  : nullptr);
    const auto t1 = std::chrono::steady_clock::now();

    Image out = res.output;
    Image degraded_full = spec.task == Task::Sisr ? upsample_bicubic(y, spec.scale) : y;
    if (pad_b || pad_r) {
        out = crop(out, 0, 0, clean.height, clean.width);
        degraded_full = crop(degraded_full, 0, 0, clean.height, clean.width);
    }

    BenchRow row;
    row.image = path.filename().string();
    row.sigma_true = spec.sigma_s;
    row.sigma_est = res.sigma_s;
    row.psnr_in = psnr(strip_border(degraded_full, crop_border), strip_border(clean, crop_border));
    const MetricReport r = evaluate_metrics(out, clean, crop_border);
    row.psnr_out = r.psnr_rgb;
    row.ssim_out = r.ssim_val;
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    return row;
}

int cmd_benchmark(const BenchmarkArgs& a) {
    const auto files = list_dataset(a.dataset);
    fs::create_directories(a.out_dir);

    DegradationSpec base;
    base.task = parse_task(a.task);
    base.scale = base.task == Task::Sisr ? a.scale : 1;
    if (!a.kernel.empty()) {
        base.kernel = load_kernel(a.kernel);
        base.has_kernel = true;
    }

    Backends b;
    setup_denoiser(b, a.opts.denoiser, a.opts.weights);
    setup_estimator(b, a.opts.estimator);

    std::vector<Image> cleans(files.size());
    for (size_t i = 0; i < files.size(); ++i) cleans[i] = load_image(files[i].string());

    if (a.sweep) {
        if (a.sigmas.size() != 1)
            throw UsageError("--sweep needs exactly one --sigma value");
        base.sigma_s = a.sigmas[0];
        base.validate();
        // lambda 2^-5..2^5, rho 2^-1..2^9: the 11x11 stability surface
        std::vector<double> mean_psnr(11 * 11, 0.0);
        parallel_for(11 * 11, a.jobs, [&](int cell) {
            const int li = cell / 11, ri = cell % 11;
            PnPConfig cfg = make_config(a.opts, base.task, base.scale, true);
            cfg.lambda = std::pow(2.0, li - 5);
            cfg.rho = std::pow(2.0, ri - 1);
            double acc = 0.0;
            for (size_t i = 0; i < files.size(); ++i)
                acc += run_pipeline(cleans[i], files[i], base, a.seed + i, b, cfg,
                                    a.opts.crop_border)
                           .psnr_out;
            mean_psnr[cell] = acc / files.size();
        });
        std::ofstream f(fs::path(a.out_dir) / "sweep.csv");
        if (!f) throw DataError("cannot write sweep.csv");
        f << "lambda_exp,rho_exp,lambda,rho,mean_psnr\n";
        for (int li = 0; li < 11; ++li)
            for (int ri = 0; ri < 11; ++ri)
                f << (li - 5) << ',' << (ri - 1) << ',' << fmt(std::pow(2.0, li - 5)) << ','
                  << fmt(std::pow(2.0, ri - 1)) << ',' << fmt(mean_psnr[li * 11 + ri], 4)
                  << '\n';
        return 0;
    }

    if (a.sigmas.empty()) throw UsageError("benchmark needs at least one --sigma");
    const PnPConfig cfg = make_config(a.opts, base.task, base.scale, true);
    const std::string kernel_name =
        a.kernel.empty() ? "none" : fs::path(a.kernel).filename().string();

    const int n_cells = static_cast<int>(a.sigmas.size());
    const int n_imgs = static_cast<int>(files.size());
    std::vector<BenchRow> rows(static_cast<size_t>(n_cells) * n_imgs);
    parallel_for(n_cells * n_imgs, a.jobs, [&](int w) {
        const int cell = w / n_imgs, i = w % n_imgs;
        DegradationSpec spec = base;
        spec.sigma_s = a.sigmas[cell];
        spec.validate();
        rows[w] = run_pipeline(cleans[i], files[i], spec, a.seed + i, b, cfg,
                               a.opts.crop_border);
    });

    std::ofstream per(fs::path(a.out_dir) / "per_image.csv");
    if (!per) throw DataError("cannot write per_image.csv");
    per << "task,kernel,scale,sigma,image,sigma_est,psnr_in,psnr_out,ssim,seconds\n";
    std::ofstream sum(fs::path(a.out_dir) / "summary.csv");
    if (!sum) throw DataError("cannot write summary.csv");
    sum << "task,kernel,scale,sigma,n,mean_psnr,mean_ssim\n";
    for (int cell = 0; cell < n_cells; ++cell) {
        double acc_p = 0.0, acc_s = 0.0;
        for (int i = 0; i < n_imgs; ++i) {
            const BenchRow& r = rows[static_cast<size_t>(cell) * n_imgs + i];
            per << a.task << ',' << kernel_name << ',' << base.scale << ',' << a.sigmas[cell]
                << ',' << r.image << ',' << fmt(r.sigma_est, 3) << ',' << fmt_psnr(r.psnr_in)
                << ',' << fmt_psnr(r.psnr_out) << ',' << fmt(r.ssim_out) << ','
                << fmt(r.seconds, 3) << '\n';
            acc_p += r.psnr_out;
            acc_s += r.ssim_out;
        }
        sum << a.task << ',' << kernel_name << ',' << base.scale << ',' << a.sigmas[cell] << ','
            << n_imgs << ',' << fmt_psnr(acc_p / n_imgs) << ',' << fmt(acc_s / n_imgs) << '\n';
    }
    return 0;
}

// ---------- subcommand: estimate-noise ----------

struct EstimateArgs {
    std::vector<std::string> inputs;
    std::string estimator = "mad";
    std::string csv;
    double sigma_true = -1.0;
    CLI::Option* sigma_opt = nullptr;
};

int cmd_estimate_noise(const EstimateArgs& a) {
    Backends b;
    setup_estimator(b, a.estimator);
    std::ofstream csv;
    if (!a.csv.empty()) {
        csv.open(a.csv);
        if (!csv) throw DataError("cannot open csv file '" + a.csv + "'");
        csv << "path,true_sigma,estimate\n";
    }
    for (const auto& path : a.inputs) {
        const double est = b.estimator.estimate(load_image(path)).sigma;
        if (a.inputs.size() == 1 && a.csv.empty())
            std::cout << fmt(est, 4) << "\n";
        else
            std::cout << path << " " << fmt(est, 4) << "\n";
        if (csv.is_open()) {
            csv << path << ',';
            if (a.sigma_opt->count()) csv << fmt(a.sigma_true, 4);
            csv << ',' << fmt(est, 4) << '\n';
        }
    }
    return 0;
}

// ---------- subcommand: curvature ----------

struct CurvatureArgs {
    std::string input, output, raw;
};

int cmd_curvature(const CurvatureArgs& a) {
    if (a.output.empty() && a.raw.empty())
        throw UsageError("curvature needs --output and/or --raw");
    const Image img = load_image(a.input);
    const Image k = gaussian_curvature(img);

    if (!a.output.empty()) {
        // symmetric rescale: zero curvature maps to mid-gray
        double peak = 0.0;
        for (double v : k.data) peak = std::max(peak, std::abs(v));
        Image vis = k;
        for (auto& v : vis.data) v = peak > 0.0 ? 0.5 + v / (2.0 * peak) : 0.5;
        save_image(vis, a.output);
    }
    if (!a.raw.empty()) {
        std::ofstream f(a.raw, std::ios::binary);
        if (!f) throw DataError("cannot open raw file '" + a.raw + "'");
        std::vector<float> buf(k.data.begin(), k.data.end());
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * 4));
        if (!f) throw DataError("raw write failed for '" + a.raw + "'");
    }
    std::cout << "height=" << k.height << " width=" << k.width << " channels=" << k.channels
              << "\n";
    return 0;
}

// ---------- subcommand: make-kernel ----------

struct MakeKernelArgs {
    std::string type = "gaussian";
    std::string output;
    int size = 7;
    double std_dev = 0.7;
    int scale = 2;
};

int cmd_make_kernel(const MakeKernelArgs& a) {
    Kernel k;
    if (a.type == "delta")
        k = delta_kernel();
    else if (a.type == "gaussian")
        k = make_gaussian_kernel(a.size, a.std_dev);
    else if (a.type == "bicubic")
        k = make_bicubic_kernel(a.scale);
    else
        throw UsageError("unknown kernel type '" + a.type + "' (delta|gaussian|bicubic)");
    save_kernel(k, a.output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plug-and-play image restoration toolkit"};
    app.require_subcommand(1);

    DegradeArgs dg;
    auto* deg = app.add_subcommand("degrade", "synthesize a degraded observation");
    deg->add_option("-i,--input", dg.input, "clean image")->required()->check(CLI::ExistingFile);
    deg->add_option("-o,--output", dg.output, "degraded image")->required();
    deg->add_option("--task", dg.task, "denoise|deblur|sisr")->required();
    deg->add_option("--kernel", dg.kernel, "blur kernel file")->check(CLI::ExistingFile);
    deg->add_option("--scale", dg.scale, "downsampling factor for sisr")->check(CLI::Range(2, 4));
    deg->add_option("--sigma", dg.sigma, "noise std on the 0-255 scale")
        ->check(CLI::NonNegativeNumber);
    deg->add_option("--seed", dg.seed, "noise seed");
    deg->add_option("--manifest", dg.manifest, "manifest path (default <output>.manifest)");
    deg->add_option("--config", dg.config, "key = value defaults file; explicit flags win");

    RestoreArgs rs;
    auto* res = app.add_subcommand("restore", "run the restoration loop");
    res->add_option("-i,--input", rs.input, "degraded image")->required()->check(CLI::ExistingFile);
    res->add_option("-o,--output", rs.output, "restored image")->required();
    res->add_option("--manifest", rs.manifest, "degradation manifest")->check(CLI::ExistingFile);
    rs.task_opt = res->add_option("--task", rs.task, "denoise|deblur|sisr");
    rs.kernel_opt = res->add_option("--kernel", rs.kernel, "blur kernel file")->check(CLI::ExistingFile);
    rs.scale_opt = res->add_option("--scale", rs.scale, "sisr factor")->check(CLI::Range(2, 4));
    rs.sigma_opt = res->add_option("--sigma", rs.sigma, "known noise std (non-blind mode)")
                       ->check(CLI::NonNegativeNumber);
    res->add_flag("--blind", rs.blind, "estimate the noise level (default)");
    res->add_option("--gt", rs.gt, "ground truth for metrics")->check(CLI::ExistingFile);
    res->add_option("--trace", rs.trace, "write per-iteration trace CSV here");
    add_restore_opts(res, rs.opts);
    res->add_option("--config", rs.config, "key = value defaults file; explicit flags win");

    BenchmarkArgs bm;
    auto* ben = app.add_subcommand("benchmark", "degrade+restore+score a dataset");
    ben->add_option("--dataset", bm.dataset, "directory of clean images")->required();
    ben->add_option("--out-dir", bm.out_dir, "output directory for CSVs");
    ben->add_option("--task", bm.task, "denoise|deblur|sisr")->required();
    ben->add_option("--kernel", bm.kernel, "blur kernel file")->check(CLI::ExistingFile);
    ben->add_option("--scale", bm.scale, "sisr factor")->check(CLI::Range(2, 4));
    ben->add_option("--sigma", bm.sigmas, "noise levels (one cell each)");
    ben->add_option("--seed", bm.seed, "base seed; image index is added");
    ben->add_option("--jobs", bm.jobs, "worker threads")->check(CLI::PositiveNumber);
    ben->add_flag("--sweep", bm.sweep, "run the 11x11 lambda/rho stability sweep");
    add_restore_opts(ben, bm.opts);
    ben->add_option("--config", bm.config, "key = value defaults file; explicit flags win");

    EstimateArgs es;
    auto* est = app.add_subcommand("estimate-noise", "print the estimated noise level");
    est->add_option("inputs", es.inputs, "images")->required()->check(CLI::ExistingFile);
    est->add_option("--estimator", es.estimator, "mad|cnn:<weights>");
    es.sigma_opt = est->add_option("--sigma", es.sigma_true, "true noise level for the CSV");
    est->add_option("--csv", es.csv, "append rows (path,true_sigma,estimate)");

    CurvatureArgs cv;
    auto* cur = app.add_subcommand("curvature", "compute the Gaussian curvature map");
    cur->add_option("-i,--input", cv.input, "image")->required()->check(CLI::ExistingFile);
    cur->add_option("-o,--output", cv.output, "8-bit visualization (mid-gray = zero)");
    cur->add_option("--raw", cv.raw, "raw float32 dump (planar, row-major)");

    MakeKernelArgs mk;
    auto* mak = app.add_subcommand("make-kernel", "write a kernel file");
    mak->add_option("--type", mk.type, "delta|gaussian|bicubic");
    mak->add_option("-o,--output", mk.output, "kernel file")->required();
    mak->add_option("--size", mk.size, "side length (odd)");
    mak->add_option("--std", mk.std_dev, "gaussian standard deviation")->check(CLI::PositiveNumber);
    mak->add_option("--scale", mk.scale, "bicubic factor")->check(CLI::Range(2, 4));

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        if (!args.empty()) {
            const CLI::App* cfg_sub = args[0] == "degrade"     ? deg
                                      : args[0] == "restore"   ? res
                                      : args[0] == "benchmark" ? ben
                                                               : nullptr;
            if (cfg_sub) {
                std::vector<std::string> merged = apply_config_defaults(
                    cfg_sub, {args.begin() + 1, args.end()});
                args.resize(1);
                args.insert(args.end(), merged.begin(), merged.end());
            }
        }
        std::reverse(args.begin(), args.end());  // parse() consumes a stack
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }

    try {
        if (app.got_subcommand(deg)) return cmd_degrade(dg);
        if (app.got_subcommand(res)) return cmd_restore(rs);
        if (app.got_subcommand(ben)) return cmd_benchmark(bm);
        if (app.got_subcommand(est)) return cmd_estimate_noise(es);
        if (app.got_subcommand(cur)) return cmd_curvature(cv);
        if (app.got_subcommand(mak)) return cmd_make_kernel(mk);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
