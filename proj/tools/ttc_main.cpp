// ttc - transform-based tensor completion toolkit.
//
// Subcommands: synth, mask, recover, metrics, gradcheck, export, bench.
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 numeric/dimension failure.

#include "ttc/gradcheck.hpp"
#include "ttc/io.hpp"
#include "ttc/metrics.hpp"
#include "ttc/recovery.hpp"
#include "ttc/tnn.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordered key=value flag set. Config-file values load first, explicit flags
// override them. Meta keys from replayed manifests are skipped.
class Args {
public:
    Args(int argc, char** argv, int first) {
        std::vector<std::pair<std::string, std::string>> raw;
        for (int i = first; i < argc; ++i) {
            std::string key = argv[i];
            if (key.rfind("--", 0) != 0)
                throw UsageError("expected --flag, got '" + key + "'");
            key = key.substr(2);
            if (is_switch(key)) {
                raw.emplace_back(key, "1");
            } else {
                if (i + 1 >= argc) throw UsageError("--" + key + " needs a value");
                raw.emplace_back(key, argv[++i]);
            }
        }
        for (auto& [k, v] : raw)
            if (k == "config") load_config(v);
        for (auto& [k, v] : raw)
            if (k != "config") set(k, v);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("missing required --" + key);
        return it->second;
    }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double num(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_num(key, it->second);
    }

    double num(const std::string& key) const { return parse_num(key, get(key)); }

    long integer(const std::string& key, long fallback) const {
        return static_cast<long>(num(key, static_cast<double>(fallback)));
    }

    bool flag(const std::string& key) const { return get(key, "0") == "1"; }

    void mark_known(std::initializer_list<std::string> keys) {
        for (const auto& k : keys) known_.push_back(k);
    }

    void reject_unknown() const {
        for (const auto& [k, v] : values_)
            if (std::find(known_.begin(), known_.end(), k) == known_.end())
                throw UsageError("unknown flag --" + k);
    }

    const std::map<std::string, std::string>& resolved() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> known_;

    static bool is_switch(const std::string& k) {
        return k == "csv" || k == "volume";
    }

    static double parse_num(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw UsageError("--" + key + ": not a number: '" + s + "'");
        }
    }

    void load_config(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ttc::IoError("cannot read config " + path);
        std::string line;
        while (std::getline(f, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string{}
                                              : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty() || key == "command" || key == "version" ||
                key == "wall_time_seconds")
                continue;
            values_[key] = val;  // explicit flags overwrite later
        }
    }

    void set(const std::string& k, const std::string& v) { values_[k] = v; }
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct Dims3 {
    std::size_t n1, n2, n3;
};

Dims3 parse_dims(const std::string& s) {
    auto parts = split(s, 'x');
    if (parts.size() != 3) throw UsageError("--dims must look like 16x16x8");
    Dims3 d{};
    try {
        d.n1 = std::stoul(parts[0]);
        d.n2 = std::stoul(parts[1]);
        d.n3 = std::stoul(parts[2]);
    } catch (const std::exception&) {
        throw UsageError("--dims must look like 16x16x8");
    }
    if (d.n1 == 0 || d.n2 == 0 || d.n3 == 0)
        throw UsageError("--dims entries must be positive");
    return d;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& p : split(s, ',')) out.push_back(std::stoul(p));
    return out;
}

void write_manifest(const std::string& command, const Args& args,
                    const std::map<std::string, std::string>& extra,
                    double wall_seconds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ttc::IoError("cannot write manifest " + path);
    f << "# ttc run manifest; replay with: ttc " << command
      << " --config <this file>\n";
    f << "command=" << command << "\n";
    f << "version=" << kVersion << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", wall_seconds);
    f << "wall_time_seconds=" << buf << "\n";
    std::map<std::string, std::string> all = args.resolved();
    for (const auto& [k, v] : extra) all[k] = v;
    all.erase("config");
    for (const auto& [k, v] : all) f << k << "=" << v << "\n";
}

std::string fmt_metric(double v) {
    if (std::isinf(v)) return "Inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void print_metrics_csv(std::ostream& os, const ttc::MetricsReport& r) {
    os << "band,psnr,ssim\n";
    for (std::size_t k = 0; k < r.psnr_band.size(); ++k)
        os << (k + 1) << "," << fmt_metric(r.psnr_band[k]) << ","
           << fmt_metric(r.ssim_band[k]) << "\n";
    os << "mean," << fmt_metric(r.mean_psnr) << "," << fmt_metric(r.mean_ssim)
       << "\n";
}

// --- subcommands -------------------------------------------------------------

int cmd_synth(Args& args) {
    args.mark_known({"kind", "dims", "rank", "components", "seed", "out"});
    args.reject_unknown();
    const auto t0 = std::chrono::steady_clock::now();
    const std::string kind = args.get("kind", "lowrank");
    const Dims3 d = parse_dims(args.get("dims"));
    const auto seed = static_cast<std::uint64_t>(args.integer("seed", 0));
    const std::string out = args.get("out");

    ttc::DenseTensor t;
    if (kind == "lowrank") {
        const auto r = static_cast<std::size_t>(args.integer("rank", 2));
        t = ttc::synth_low_tubal_rank(d.n1, d.n2, d.n3, r, seed);
    } else if (kind == "smooth") {
        const auto p = static_cast<std::size_t>(args.integer("components", 6));
        t = ttc::synth_smooth(d.n1, d.n2, d.n3, seed, p);
    } else {
        throw UsageError("--kind must be lowrank or smooth");
    }
    ttc::save_tensor(t, out);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest("synth", args, {{"kind", kind}}, secs, out + ".manifest");
    std::cout << "synth: wrote " << t.dims_str() << " " << kind << " tensor to "
              << out << "\n";
    return 0;
}

int cmd_mask(Args& args) {
    args.mark_known({"mode", "dims", "like", "sr", "seed", "out"});
    args.reject_unknown();
    const auto t0 = std::chrono::steady_clock::now();
    const std::string mode = args.get("mode", "random");
    const double sr = args.num("sr");
    const auto seed = static_cast<std::uint64_t>(args.integer("seed", 0));
    const std::string out = args.get("out");

    Dims3 d{};
    if (args.has("like")) {
        ttc::DenseTensor ref = ttc::load_tensor(args.get("like"));
        d = {ref.n1(), ref.n2(), ref.n3()};
    } else {
        d = parse_dims(args.get("dims"));
    }

    ttc::MaskTensor m;
    if (mode == "random") {
        m = ttc::gen_random_mask(d.n1, d.n2, d.n3, sr, seed);
    } else if (mode == "tube") {
        m = ttc::gen_tube_mask(d.n1, d.n2, d.n3, sr, seed);
    } else {
        throw UsageError("--mode must be random or tube");
    }
    ttc::save_tensor(m, out);

    std::size_t ones = 0;
    for (double v : m.values())
        if (v == 1.0) ++ones;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest("mask", args, {{"mode", mode}}, secs, out + ".manifest");
    std::cout << "mask: " << m.dims_str() << " mode=" << mode << " sr=" << sr
              << " observed=" << ones;
    if (mode == "tube") std::cout << " tubes=" << ones / d.n3;
    std::cout << " -> " << out << "\n";
    return 0;
}

ttc::RecoveryConfig recovery_config_from_args(const Args& args,
                                              const std::string& variant_name) {
    auto variant = ttc::variant_from_name(variant_name);
    if (!variant)
        throw UsageError(
            "--variant must be dtr, hlrtf_like, tubal_factorization or "
            "deep_facewise");
    ttc::RecoveryConfig cfg;
    cfg.variant = *variant;
    cfg.iterations = args.integer("iters", 2000);
    cfg.lr = args.num("lr", 0.001);
    cfg.seed = static_cast<std::uint64_t>(args.integer("seed", 0));
    cfg.n_hat3 = static_cast<std::size_t>(args.integer("nhat3", 0));
    cfg.log_every = args.integer("log-every", 100);
    cfg.unet.depth = static_cast<std::size_t>(args.integer("depth", 2));
    cfg.unet.base_channels =
        static_cast<std::size_t>(args.integer("base-channels", 32));
    cfg.unet.kernel = static_cast<std::size_t>(args.integer("kernel", 3));
    cfg.fcn.layers = static_cast<std::size_t>(args.integer("fcn-layers", 2));
    cfg.rank = static_cast<std::size_t>(args.integer("rank", 0));
    if (args.has("ranks")) cfg.facewise_ranks = parse_size_list(args.get("ranks"));
    return cfg;
}

int cmd_recover(Args& args) {
    args.mark_known({"variant", "input", "mask", "iters", "lr", "seed", "out",
                     "truth", "nhat3", "rank", "ranks", "depth", "base-channels",
                     "kernel", "fcn-layers", "log-every", "loss-csv", "csv"});
    args.reject_unknown();
    const auto t0 = std::chrono::steady_clock::now();
    const std::string out = args.get("out");
    const std::string variant = args.get("variant");
    ttc::RecoveryConfig cfg = recovery_config_from_args(args, variant);

    ttc::LoadedTensor obs = ttc::load_tensor_file(args.get("input"));
    ttc::LoadedTensor mask = ttc::load_tensor_file(args.get("mask"));
    std::optional<ttc::DenseTensor> truth;
    if (args.has("truth")) truth = ttc::load_tensor(args.get("truth"));

    ttc::RecoveryResult result =
        ttc::recover(obs.data, mask.data, cfg, truth ? &*truth : nullptr);

    ttc::save_tensor(result.recovered, out, obs.order4);
    const std::string loss_csv = args.get("loss-csv", out + ".loss.csv");
    ttc::write_loss_csv(result.loss_trajectory, loss_csv);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest("recover", args,
                   {{"variant", variant}, {"loss-csv", loss_csv}}, secs,
                   out + ".manifest");

    std::cout << "recover: variant=" << variant << " iters=" << cfg.iterations
              << " final_loss=" << result.loss_trajectory.back().second
              << " -> " << out << "\n";
    if (result.metrics) {
        if (args.flag("csv"))
            print_metrics_csv(std::cout, *result.metrics);
        else
            std::cout << "recover: psnr=" << fmt_metric(result.metrics->mean_psnr)
                      << " ssim=" << fmt_metric(result.metrics->mean_ssim)
                      << "\n";
    }
    return 0;
}

int cmd_metrics(Args& args) {
    args.mark_known({"a", "b", "out", "csv", "volume"});
    args.reject_unknown();
    const auto t0 = std::chrono::steady_clock::now();
    ttc::DenseTensor a = ttc::load_tensor(args.get("a"));
    ttc::DenseTensor b = ttc::load_tensor(args.get("b"));
    ttc::MetricsReport r = ttc::evaluate_metrics(a, b);

    if (args.flag("volume")) {
        const double vp = ttc::psnr_volume(a, b);
        std::cout << "volume_psnr=" << fmt_metric(vp) << "\n";
    }
    if (args.flag("csv")) {
        print_metrics_csv(std::cout, r);
    } else {
        std::cout << "PSNR " << fmt_metric(r.mean_psnr) << " dB, SSIM "
                  << fmt_metric(r.mean_ssim) << " (" << r.psnr_band.size()
                  << " bands)\n";
    }
    if (args.has("out")) {
        std::ofstream f(args.get("out"));
        if (!f) throw ttc::IoError("cannot write " + args.get("out"));
        print_metrics_csv(f, r);
        f.close();
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        write_manifest("metrics", args, {}, secs, args.get("out") + ".manifest");
    }
    return 0;
}

int cmd_gradcheck(Args& args) {
    args.mark_known({"h", "tol", "seed"});
    args.reject_unknown();
    const double h = args.num("h", 1e-5);
    const double tol = args.num("tol", 1e-4);
    const auto seed = static_cast<std::uint64_t>(args.integer("seed", 20240501));
    bool all_ok = true;
    for (const auto& c : ttc::standard_gradient_battery(seed)) {
        const auto report =
            ttc::grad_check(c.builder, c.leaves, c.leaf_names, h, tol);
        all_ok = all_ok && report.passed;
        std::printf("%-28s %s  max_rel_err=%.3e\n", c.name.c_str(),
                    report.passed ? "ok  " : "FAIL", report.worst);
    }
    if (!all_ok) throw ttc::NumericError("gradient check failed");
    return 0;
}

int cmd_export(Args& args) {
    args.mark_known({"input", "r", "g", "b", "out"});
    args.reject_unknown();
    const auto t0 = std::chrono::steady_clock::now();
    ttc::DenseTensor t = ttc::load_tensor(args.get("input"));
    const std::string out = args.get("out");
    ttc::export_ppm(t, static_cast<std::size_t>(args.integer("r", 0)),
                    static_cast<std::size_t>(args.integer("g", 0)),
                    static_cast<std::size_t>(args.integer("b", 0)), out);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest("export", args, {}, secs, out + ".manifest");
    std::cout << "export: wrote " << t.n2() << "x" << t.n1() << " image to "
              << out << "\n";
    return 0;
}

struct BenchCell {
    std::string variant;
    std::string mode;
    double sr = 0.0;
    std::uint64_t seed = 0;
    double psnr = 0.0, ssim = 0.0, seconds = 0.0;
};

int cmd_bench(Args& args) {
    args.mark_known({"input", "variants", "srs", "modes", "seeds", "iters",
                     "lr", "rank", "ranks", "base-channels", "depth", "kernel",
                     "fcn-layers", "nhat3", "jobs", "out", "csv"});
    args.reject_unknown();
    const auto t0 = std::chrono::steady_clock::now();
    ttc::DenseTensor truth = ttc::load_tensor(args.get("input"));
    const std::string out = args.get("out");

    std::vector<std::string> variants = split(args.get("variants", "dtr"), ',');
    std::vector<std::string> modes = split(args.get("modes", "random"), ',');
    std::vector<double> srs;
    for (const auto& s : split(args.get("srs", "0.1,0.2,0.3"), ','))
        srs.push_back(std::stod(s));
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split(args.get("seeds", "0"), ','))
        seeds.push_back(std::stoull(s));

    for (const auto& v : variants)
        if (v != "tnn" && !ttc::variant_from_name(v))
            throw UsageError("unknown bench variant '" + v + "'");
    for (const auto& mo : modes)
        if (mo != "random" && mo != "tube")
            throw UsageError("--modes entries must be random or tube");

    std::vector<BenchCell> cells;
    for (const auto& v : variants)
        for (const auto& mo : modes)
            for (double sr : srs)
                for (std::uint64_t sd : seeds) cells.push_back({v, mo, sr, sd});

    const long jobs = std::max(1L, args.integer("jobs", 1));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size() || failed.load()) return;
            BenchCell& c = cells[i];
            try {
                ttc::MaskTensor m =
                    c.mode == "tube"
                        ? ttc::gen_tube_mask(truth.n1(), truth.n2(), truth.n3(),
                                             c.sr, 1000 + c.seed)
                        : ttc::gen_random_mask(truth.n1(), truth.n2(),
                                               truth.n3(), c.sr, 1000 + c.seed);
                ttc::DenseTensor o = ttc::hadamard(truth, m);
                if (c.variant == "tnn") {
                    const auto cell_t0 = std::chrono::steady_clock::now();
                    ttc::TnnResult r = ttc::tnn_admm_complete(o, m);
                    c.seconds = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - cell_t0)
                                    .count();
                    ttc::MetricsReport rep =
                        ttc::evaluate_metrics(r.completed, truth);
                    c.psnr = rep.mean_psnr;
                    c.ssim = rep.mean_ssim;
                } else {
                    ttc::RecoveryConfig cfg =
                        recovery_config_from_args(args, c.variant);
                    cfg.seed = c.seed;
                    ttc::RecoveryResult r = ttc::recover(o, m, cfg, &truth);
                    c.psnr = r.metrics->mean_psnr;
                    c.ssim = r.metrics->mean_ssim;
                    c.seconds = r.wall_seconds;
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                failed = true;
                if (first_error.empty()) first_error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (long j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed) throw ttc::NumericError("bench cell failed: " + first_error);

    std::ofstream f(out);
    if (!f) throw ttc::IoError("cannot write " + out);
    f << "variant,mask,sr,psnr,ssim,seconds\n";
    char buf[160];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%g,%s,%s,%.3f\n",
                      c.variant.c_str(), c.mode.c_str(), c.sr,
                      fmt_metric(c.psnr).c_str(), fmt_metric(c.ssim).c_str(),
                      c.seconds);
        f << buf;
        if (args.flag("csv")) std::cout << buf;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest("bench", args, {}, secs, out + ".manifest");
    std::cout << "bench: " << cells.size() << " cells -> " << out << "\n";
    return 0;
}

void print_usage() {
    std::cout
        << "usage: ttc <command> [--flags]\n"
           "\n"
           "commands:\n"
           "  synth      --dims N1xN2xN3 --out T.dtt [--kind lowrank|smooth]\n"
           "             [--rank R] [--components P] [--seed S]\n"
           "  mask       --sr F --out M.dtt (--dims N1xN2xN3 | --like T.dtt)\n"
           "             [--mode random|tube] [--seed S]\n"
           "  recover    --variant "
           "dtr|hlrtf_like|tubal_factorization|deep_facewise\n"
           "             --input O.dtt --mask M.dtt --out X.dtt [--iters N]\n"
           "             [--lr F] [--seed S] [--truth T.dtt] [--rank R]\n"
           "             [--ranks a,b] [--nhat3 K] [--depth L] "
           "[--base-channels C]\n"
           "             [--fcn-layers K] [--log-every N] [--loss-csv F.csv]\n"
           "  metrics    --a X.dtt --b REF.dtt [--csv] [--volume] [--out F.csv]\n"
           "  gradcheck  [--h F] [--tol F] [--seed S]\n"
           "  export     --input X.dtt --out IMG.ppm [--r B] [--g B] [--b B]\n"
           "  bench      --input T.dtt --out R.csv [--variants v1,v2] [--srs "
           "...]\n"
           "             [--modes random,tube] [--seeds 0,1] [--jobs N] [...]\n"
           "\n"
           "Every file-writing run emits <out>.manifest; rerun bit-identically\n"
           "with: ttc <command> --config <manifest>.\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage();
        return 1;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
        print_usage();
        return 0;
    }
    try {
        Args args(argc, argv, 2);
        if (command == "synth") return cmd_synth(args);
        if (command == "mask") return cmd_mask(args);
        if (command == "recover") return cmd_recover(args);
        if (command == "metrics") return cmd_metrics(args);
        if (command == "gradcheck") return cmd_gradcheck(args);
        if (command == "export") return cmd_export(args);
        if (command == "bench") return cmd_bench(args);
        throw UsageError("unknown command '" + command + "'");
    } catch (const UsageError& e) {
        std::cerr << "ttc: " << e.what() << "\n";
        return 1;
    } catch (const ttc::IoError& e) {
        std::cerr << "ttc: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ttc: " << e.what() << "\n";
        return 3;
    }
}
