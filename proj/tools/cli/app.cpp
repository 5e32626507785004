#include "cli/app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include "cli/io.hpp"
#include "csl/csl.hpp"

namespace csl::cli {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

#ifndef CSL_VERSION
#define CSL_VERSION "0.0.0"
#endif

// Seed streams: data, projector and bank draws never share a generator.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kProjectorStream = 2;
constexpr std::uint64_t kBankStream = 3;
constexpr std::uint64_t kClusterStream = 4;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

struct Context {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool header = false;
    json echo = json::object();
    json timing = json::object();
    std::vector<std::string> warnings;

    json number(double v, const std::string& what) {
        if (std::isfinite(v)) return v;
        warnings.push_back(what + " is not finite; written as null");
        return nullptr;
    }
    json number(const std::optional<double>& v, const std::string& what) {
        if (!v) {
            warnings.push_back(what + " is undefined; written as null");
            return nullptr;
        }
        return number(*v, what);
    }
};

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::ConfigError, what); }

/// Typed access to one JSON object; every key read is echoed and unread keys are rejected.
class Config {
public:
    Config() = default;
    Config(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
        if (!j_.is_object()) config_error(where_ + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T need(const std::string& key) {
        if (!has(key)) config_error(where_ + ": missing required key '" + key + "'");
        return take<T>(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) {
            used_.insert(key);
            echo_[key] = to_json(fallback);
            return fallback;
        }
        return take<T>(key);
    }

    template <typename T>
    std::optional<T> maybe(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return take<T>(key);
    }

    std::optional<Config> section(const std::string& key) {
        if (!has(key)) return std::nullopt;
        used_.insert(key);
        return Config(j_[key], where_ + "." + key);
    }

    void adopt(const std::string& key, const Config& sub) { echo_[key] = sub.echo_; }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!used_.count(key)) config_error(where_ + ": unknown key '" + key + "'");
    }

    const json& echo() const { return echo_; }

private:
    template <typename T>
    T take(const std::string& key) {
        used_.insert(key);
        T v = convert<T>(j_[key], where_ + "." + key);
        echo_[key] = to_json(v);
        return v;
    }

    template <typename T>
    static json to_json(const T& v) {
        if constexpr (std::is_same_v<T, Matrix>) {
            json rows = json::array();
            for (std::size_t i = 0; i < v.rows(); ++i) rows.push_back(std::vector<double>(v.row(i).begin(), v.row(i).end()));
            return rows;
        } else {
            return json(v);
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, std::size_t>) {
            if (!v.is_number_unsigned()) config_error(where + " must be a nonnegative integer");
            return v.get<std::size_t>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) config_error(where + " must be a number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) config_error(where + " must be true or false");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) config_error(where + " must be a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, Matrix>) {
            if (!v.is_array() || v.empty()) config_error(where + " must be a nonempty array of rows");
            const std::size_t rows = v.size();
            const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
            Matrix m(rows, cols);
            for (std::size_t i = 0; i < rows; ++i) {
                if (!v[i].is_array() || v[i].size() != cols || cols == 0) config_error(where + " must be rectangular");
                for (std::size_t j = 0; j < cols; ++j) m(i, j) = convert<double>(v[i][j], where);
            }
            return m;
        } else {
            using E = typename T::value_type;
            if (!v.is_array()) config_error(where + " must be an array");
            T out;
            for (const auto& e : v) out.push_back(convert<E>(e, where + "[]"));
            return out;
        }
    }

    json j_ = json::object();
    std::string where_ = "config";
    std::set<std::string> used_;
    json echo_ = json::object();
};

Config load_config(const std::string& path) {
    if (path.empty()) return Config(json::object(), "config");
    try {
        return Config(json::parse(read_text(path)), path);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, path + ": " + e.what());
    }
}

ProjectorFamily family_from(const std::string& name) {
    auto f = parse_projector_family(name);
    if (!f) config_error("unknown projector family '" + name + "' (gaussian, rademacher, hadamard, fourier)");
    return *f;
}

/// Subspaces of a synthetic union: random, or mutually orthogonal blocks of one frame.
std::vector<Subspace> synthetic_bank(std::size_t ambient, const std::vector<std::size_t>& dims, bool orthogonal,
                                     std::uint64_t seed) {
    if (orthogonal) return orthogonal_subspaces(ambient, dims, derive_seed(seed, kBankStream));
    std::vector<Subspace> out;
    for (std::size_t l = 0; l < dims.size(); ++l)
        out.push_back(random_subspace(ambient, dims[l], derive_seed(seed, kBankStream, l)));
    return out;
}

struct SynthSection {
    UosSpec spec;
    bool orthogonal = false;
};

SynthSection read_synth(Config& c, std::uint64_t seed) {
    SynthSection s;
    s.spec.ambient_dim = c.need<std::size_t>("ambient_dim");
    s.spec.dims = c.need<std::vector<std::size_t>>("dims");
    s.spec.points_per_subspace = c.need<std::size_t>("points_per_subspace");
    s.spec.noise_sigma = c.get<double>("noise_sigma", 0.0);
    s.spec.noise_covariance = c.maybe<Matrix>("noise_covariance");
    s.orthogonal = c.get<bool>("orthogonal", false);
    s.spec.seed = derive_seed(seed, kDataStream);
    c.finish();
    return s;
}

UosDataset make_dataset(const SynthSection& s) {
    validate(s.spec);
    const std::uint64_t bank_seed = s.spec.seed;
    return generate_uos(s.spec, synthetic_bank(s.spec.ambient_dim, s.spec.dims, s.orthogonal, bank_seed));
}

struct DataFiles {
    std::string points;
    std::string labels;
    std::vector<std::string> bases;
    bool given() const { return !points.empty() || !labels.empty() || !bases.empty(); }
};

struct ProjectorChoice {
    std::string family = "none";
    std::size_t n = 0;

    void add_to(CLI::App* sub) {
        sub->add_option("--family", family, "Projector family, or none for uncompressed")->capture_default_str();
        sub->add_option("--n", n, "Target dimension when compressing");
    }

    std::optional<JlProjector> build(std::size_t ambient, std::uint64_t seed, Context& ctx) const {
        ctx.echo["family"] = family;
        if (family == "none") return std::nullopt;
        ctx.echo["n"] = n;
        if (n == 0) config_error("--n is required with --family " + family);
        return make_projector(family_from(family), ambient, n, derive_seed(seed, kProjectorStream));
    }
};

std::vector<int> checked_labels(const std::string& path, std::size_t rows) {
    std::vector<int> labels = read_labels(path);
    require(labels.size() == rows, ErrorCode::LengthMismatch,
            path + ": " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) + " points");
    return labels;
}

json label_counts(const std::vector<int>& labels) {
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    json out = json::object();
    for (const auto& [l, c] : counts) out[std::to_string(l)] = c;
    return out;
}

// ---------------------------------------------------------------- commands

json cmd_synth(Context& ctx, const std::string& config_path, const std::string& out_path,
               const std::string& labels_path, const std::string& bases_prefix) {
    Config cfg = load_config(config_path);
    const SynthSection s = read_synth(cfg, ctx.seed);
    ctx.echo = cfg.echo();

    auto t0 = Clock::now();
    const UosDataset ds = make_dataset(s);
    ctx.timing["generate"] = ms_since(t0);

    t0 = Clock::now();
    write_matrix_csv(out_path, ds.data);
    write_labels(labels_path, ds.labels);
    json basis_files = json::array();
    if (!bases_prefix.empty())
        for (std::size_t l = 0; l < ds.bases.size(); ++l) {
            const std::string path = bases_prefix + std::to_string(l) + ".csv";
            write_basis(path, ds.bases[l]);
            basis_files.push_back(path);
        }
    ctx.timing["write"] = ms_since(t0);

    json r;
    r["rows"] = ds.data.rows();
    r["cols"] = ds.data.cols();
    r["subspaces"] = ds.bases.size();
    r["label_counts"] = label_counts(ds.labels);
    r["data"] = out_path;
    r["labels"] = labels_path;
    if (!basis_files.empty()) r["bases"] = basis_files;
    return r;
}

json cmd_project(Context& ctx, const std::string& in, const std::string& family, std::size_t n,
                 const std::string& out_path) {
    ctx.echo["family"] = family;
    ctx.echo["n"] = n;
    const Matrix x = read_matrix_csv(in, ctx.header);

    auto t0 = Clock::now();
    const JlProjector p = make_projector(family_from(family), x.cols(), n, ctx.seed);
    ctx.timing["build"] = ms_since(t0);

    t0 = Clock::now();
    Matrix y(x.rows(), n);
    parallel_for(x.rows(), ctx.threads, [&](std::size_t i) {
        const Vector v = p.apply(x.row(i));
        std::copy(v.begin(), v.end(), y.row(i).begin());
    });
    ctx.timing["project"] = ms_since(t0);

    write_matrix_csv(out_path, y);
    json r;
    r["rows"] = x.rows();
    r["ambient_dim"] = x.cols();
    r["target_dim"] = n;
    r["padded_dim"] = p.padded_dim();
    r["output"] = out_path;
    return r;
}

json angles_json(const Vector& th, Context& ctx) {
    json a = json::array();
    for (std::size_t k = 0; k < th.size(); ++k) a.push_back(ctx.number(th[k], "angle " + std::to_string(k)));
    return a;
}

json cmd_angles(Context& ctx, const std::string& a_path, const std::string& b_path) {
    const Subspace a = read_basis(a_path), b = read_basis(b_path);
    const auto t0 = Clock::now();
    const Vector th = canonical_angles(a, b).angles;
    ctx.timing["angles"] = ms_since(t0);
    json r;
    r["ambient_dim"] = a.ambient_dim();
    r["dims"] = {a.dim(), b.dim()};
    r["angles"] = angles_json(th, ctx);
    r["affinity"] = ctx.number(affinity_from_angles(th), "affinity");
    return r;
}

json cmd_distance(Context& ctx, const std::string& a_path, const std::string& b_path, const std::string& kind) {
    ctx.echo["kind"] = kind;
    const Subspace a = read_basis(a_path), b = read_basis(b_path);
    std::vector<DistanceKind> kinds;
    if (kind == "all") {
        for (DistanceKind k : kAllDistanceKinds) {
            if (a.dim() != b.dim() && !supports_unequal_dims(k)) {
                ctx.warnings.push_back(std::string(to_string(k)) + " skipped: needs equal dimensions");
                continue;
            }
            kinds.push_back(k);
        }
    } else {
        auto k = parse_distance_kind(kind);
        if (!k) config_error("unknown distance kind '" + kind + "'");
        kinds.push_back(*k);
    }
    require(a.ambient_dim() == b.ambient_dim(), ErrorCode::AmbientMismatch,
            std::to_string(a.ambient_dim()) + " vs " + std::to_string(b.ambient_dim()));
    for (DistanceKind k : kinds)
        if (a.dim() != b.dim() && !supports_unequal_dims(k))
            fail(ErrorCode::UnequalDimUnsupported, std::string(to_string(k)) + " needs equal dimensions");

    const auto t0 = Clock::now();
    const Vector th = canonical_angles(a, b).angles;
    json d = json::object();
    for (DistanceKind k : kinds)
        d[std::string(to_string(k))] =
            ctx.number(distance_from_angles(th, a.dim(), b.dim(), k), std::string(to_string(k)));
    ctx.timing["distance"] = ms_since(t0);

    json r;
    r["ambient_dim"] = a.ambient_dim();
    r["dims"] = {a.dim(), b.dim()};
    r["angles"] = angles_json(th, ctx);
    r["distances"] = d;
    return r;
}

void write_raw_distortions(const std::string& path, const DistortionReport& rep) {
    std::string text = "n,trial,pair,k,theta,psi,absolute,signed_relative\n";
    for (const auto& a : rep.angle_records) {
        text += std::to_string(a.n) + ',' + std::to_string(a.trial) + ',' + std::to_string(a.pair) + ',' +
                std::to_string(a.k) + ',' + format_double(a.theta) + ',' + format_double(a.psi) + ',' +
                format_double(a.absolute()) + ',';
        if (auto s = a.signed_relative()) text += format_double(*s);
        text += '\n';
    }
    write_text(path, text);
}

json cmd_capbench(Context& ctx, const std::string& config_path, const std::string& raw_csv) {
    Config c = load_config(config_path);
    CapExperimentConfig cfg;
    cfg.ambient_dim = c.need<std::size_t>("ambient_dim");
    const int sources = c.has("dims") + c.has("prescribed_angles") + c.has("basis_files");
    if (sources != 1) config_error("give exactly one of dims, prescribed_angles, basis_files");
    std::optional<std::vector<Subspace>> subspaces;
    if (auto angles = c.maybe<std::vector<double>>("prescribed_angles")) cfg.prescribed_angles = Vector(*angles);
    if (auto paths = c.maybe<std::vector<std::string>>("basis_files")) {
        subspaces.emplace();
        for (const auto& p : *paths) {
            subspaces->push_back(read_basis(p));
            require(subspaces->back().ambient_dim() == cfg.ambient_dim, ErrorCode::AmbientMismatch,
                    p + ": ambient dimension differs from ambient_dim");
            cfg.dims.push_back(subspaces->back().dim());
        }
    }
    if (c.has("dims")) cfg.dims = c.need<std::vector<std::size_t>>("dims");
    // "restriction" keeps the first n coordinates: an exact-identity check for subspaces supported there.
    const std::string family = c.get<std::string>("family", "gaussian");
    const bool restriction = family == "restriction";
    if (!restriction) cfg.family = family_from(family);
    cfg.target_dims = c.need<std::vector<std::size_t>>("target_dims");
    if (restriction && cfg.target_dims.size() != 1) config_error("family restriction takes a single target dim");
    cfg.trials = c.need<std::size_t>("trials");
    cfg.failure_levels = c.get<std::vector<double>>("failure_levels", cfg.failure_levels);
    cfg.target_epsilon = c.get<double>("target_epsilon", cfg.target_epsilon);
    const bool constants = c.get<bool>("estimate_constants", false);
    c.finish();
    ctx.echo = c.echo();
    cfg.base_seed = ctx.seed;
    cfg.threads = ctx.threads;

    auto t0 = Clock::now();
    validate(cfg);
    std::optional<JlProjector> fixed;
    if (restriction) fixed = csl::testing::make_restriction_projector(cfg.ambient_dim, cfg.target_dims[0]);
    const DistortionReport rep =
        run_cap_experiment(cfg, subspaces ? &*subspaces : nullptr, fixed ? &*fixed : nullptr);
    ctx.timing["trials"] = ms_since(t0);
    ctx.warnings.insert(ctx.warnings.end(), rep.warnings.begin(), rep.warnings.end());

    json r;
    json orig = json::array();
    for (const Vector& a : rep.original_angles) orig.push_back(angles_json(a, ctx));
    r["original_angles"] = orig;

    json levels = json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const LevelSummary& s = rep.levels[i];
        const std::string at = "n=" + std::to_string(s.n) + " ";
        json l;
        l["n"] = s.n;
        l["trials"] = s.trials;
        l["collapsed_trials"] = s.collapsed_trials;
        l["relative_samples"] = s.relative_samples;
        l["angle_rel_median"] = ctx.number(s.angle_rel_median, at + "angle_rel_median");
        l["angle_rel_p95"] = ctx.number(s.angle_rel_p95, at + "angle_rel_p95");
        l["angle_abs_median"] = ctx.number(s.angle_abs_median, at + "angle_abs_median");
        l["angle_signed_min"] = ctx.number(s.angle_signed_min, at + "angle_signed_min");
        l["angle_signed_max"] = ctx.number(s.angle_signed_max, at + "angle_signed_max");
        l["sine_rel_median"] = ctx.number(s.sine_rel_median, at + "sine_rel_median");
        l["cosine_rel_median"] = ctx.number(s.cosine_rel_median, at + "cosine_rel_median");
        l["affinity_rel_median"] = ctx.number(s.affinity_rel_median, at + "affinity_rel_median");
        json dist = json::object();
        for (std::size_t k = 0; k < kAllDistanceKinds.size(); ++k) {
            const std::string name(to_string(kAllDistanceKinds[k]));
            if (k < s.distance_rel_median.size() && s.distance_rel_median[k])
                dist[name] = ctx.number(*s.distance_rel_median[k], at + name);
            else
                dist[name] = nullptr;
        }
        l["distance_rel_median"] = dist;
        json fails = json::array();
        for (std::size_t e = 0; e < s.failure_fraction.size(); ++e)
            fails.push_back({{"epsilon", cfg.failure_levels[e]}, {"fraction", s.failure_fraction[e]}});
        l["failure"] = fails;
        l["failure_units"] = s.failure_units;
        levels.push_back(l);
        if (i > 0 && !(s.angle_rel_median < rep.levels[i - 1].angle_rel_median)) decreasing = false;
    }
    r["levels"] = levels;
    r["median_strictly_decreasing"] = decreasing;
    if (rep.decay)
        r["decay"] = {{"slope", ctx.number(rep.decay->slope, "decay slope")},
                      {"intercept", ctx.number(rep.decay->intercept, "decay intercept")},
                      {"residual", ctx.number(rep.decay->residual, "decay residual")}};
    else {
        r["decay"] = nullptr;
        ctx.warnings.push_back("decay fit needs at least 3 usable target dims; written as null");
    }

    if (constants) {
        t0 = Clock::now();
        const ConstantEstimates est = estimate_constants(rep);
        ctx.timing["constants"] = ms_since(t0);
        r["constants"] = {{"c1_hat", ctx.number(est.c1_hat, "c1_hat")},
                          {"n_at_target", ctx.number(est.n_at_target, "n_at_target")},
                          {"c2_hat", ctx.number(est.c2.c2_hat, "c2_hat")},
                          {"c2_is_lower_bound", est.c2.lower_bound},
                          {"c2_points_used", est.c2.points_used},
                          {"window", est.window}};
    }
    if (!raw_csv.empty()) {
        write_raw_distortions(raw_csv, rep);
        r["raw_csv"] = raw_csv;
    }
    return r;
}

/// Points, labels and bases from files or from a "synthetic" config section.
LabeledPoints load_labeled(Config& c, const DataFiles& files, std::uint64_t seed, bool need_bases, Context& ctx) {
    auto synth = c.section("synthetic");
    if (synth && files.given()) config_error("give data files or a synthetic section, not both");
    LabeledPoints data;
    if (synth) {
        const SynthSection s = read_synth(*synth, seed);
        c.adopt("synthetic", *synth);
        UosDataset ds = make_dataset(s);
        data.points = std::move(ds.data);
        data.labels = std::move(ds.labels);
        data.bases = std::move(ds.bases);
        return data;
    }
    if (files.points.empty()) config_error("no data: pass --in (with --labels) or a synthetic config section");
    data.points = read_matrix_csv(files.points, ctx.header);
    if (!files.labels.empty()) data.labels = checked_labels(files.labels, data.points.rows());
    for (const auto& b : files.bases) data.bases.push_back(read_basis(b));
    if (need_bases && data.bases.empty()) config_error("pass one --basis file per label");
    if (need_bases && data.labels.empty()) config_error("--labels is required");
    ctx.echo["files"] = {{"in", files.points}, {"labels", files.labels}, {"bases", files.bases}};
    return data;
}

json cmd_visualize(Context& ctx, const std::string& config_path, const DataFiles& files, const ProjectorChoice& proj,
                   const std::string& coords_out, const std::string& svg_out) {
    Config c = load_config(config_path);
    const double u = c.get<double>("u", 1.0);
    const double v = c.get<double>("v", 1.0);
    const std::size_t out_dim = c.get<std::size_t>("out_dim", 2);
    if (out_dim != 2 && out_dim != 3) config_error("out_dim must be 2 or 3");
    LabeledPoints data = load_labeled(c, files, ctx.seed, true, ctx);
    c.finish();
    json echo = c.echo();
    echo.update(ctx.echo);
    ctx.echo = echo;
    const auto projector = proj.build(data.points.cols(), ctx.seed, ctx);

    auto t0 = Clock::now();
    if (projector) data = compress(data, *projector);
    ctx.timing["project"] = ms_since(t0);
    t0 = Clock::now();
    const DissimilarityMatrix d = dissimilarity(data, u, v);
    ctx.timing["dissimilarity"] = ms_since(t0);
    t0 = Clock::now();
    const EmbeddingCoords emb = classical_mds(d.values, out_dim);
    ctx.timing["mds"] = ms_since(t0);

    json r;
    r["points"] = emb.coords.rows();
    r["out_dim"] = out_dim;
    r["working_dim"] = data.points.cols();
    json ev = json::array();
    for (std::size_t i = 0; i < emb.eigenvalues.size(); ++i)
        ev.push_back(ctx.number(emb.eigenvalues[i], "eigenvalue " + std::to_string(i)));
    r["eigenvalues"] = ev;
    if (!coords_out.empty()) {
        write_coords_csv(coords_out, emb.coords, data.labels);
        r["coords"] = coords_out;
    }
    if (!svg_out.empty()) {
        write_text(svg_out, scatter_svg(emb.coords, data.labels));
        r["svg"] = svg_out;
    }
    return r;
}

json cmd_detect(Context& ctx, const std::string& config_path, const DataFiles& files, const ProjectorChoice& proj,
                const std::string& predictions_out) {
    Config c = load_config(config_path);
    json r;
    if (auto bank_cfg = c.section("bank")) {
        if (files.given()) config_error("give data files or a bank section, not both");
        const std::size_t ambient = bank_cfg->need<std::size_t>("ambient_dim");
        const auto dims = bank_cfg->need<std::vector<std::size_t>>("dims");
        const bool orthogonal = bank_cfg->get<bool>("orthogonal", false);
        bank_cfg->finish();
        c.adopt("bank", *bank_cfg);
        DetectionTrialConfig trials;
        trials.trials = c.get<std::size_t>("trials", 1000);
        trials.delta = c.get<double>("delta", 0.0);
        trials.seed = derive_seed(ctx.seed, kDataStream);
        c.finish();
        ctx.echo = c.echo();
        if (dims.empty()) fail(ErrorCode::EmptyBank, "bank.dims is empty");

        const SubspaceBank bank(synthetic_bank(ambient, dims, orthogonal, ctx.seed));
        const auto projector = proj.build(ambient, ctx.seed, ctx);
        auto t0 = Clock::now();
        std::optional<CompressedDetector> compressed;
        if (projector) compressed.emplace(bank, *projector);
        ctx.timing["project"] = ms_since(t0);
        t0 = Clock::now();
        const double err = detection_error_rate(bank, trials, compressed ? &*compressed : nullptr);
        ctx.timing["detect"] = ms_since(t0);
        r["mode"] = "monte-carlo";
        r["trials"] = trials.trials;
        r["error_rate"] = ctx.number(err, "error_rate");
        r["correct_rate"] = ctx.number(1.0 - err, "correct_rate");

        const bool equal_dims = std::all_of(dims.begin(), dims.end(), [&](std::size_t d) { return d == dims[0]; });
        if (bank.size() >= 2 && equal_dims) {
            double aff = 0.0;
            for (std::size_t i = 0; i < bank.size(); ++i)
                for (std::size_t j = i + 1; j < bank.size(); ++j) aff = std::max(aff, affinity(bank[i], bank[j]));
            const DetectionBound b = detection_bound(aff, trials.delta, dims[0], bank.size() - 1);
            r["bound"] = {{"max_affinity", ctx.number(aff, "max_affinity")},
                          {"exponent", ctx.number(b.exponent, "bound exponent")},
                          {"correct_probability", ctx.number(b.probability, "bound probability")},
                          {"vacuous", b.vacuous}};
        }
        return r;
    }

    LabeledPoints data = load_labeled(c, files, ctx.seed, true, ctx);
    c.finish();
    json echo = c.echo();
    echo.update(ctx.echo);
    ctx.echo = echo;
    for (int l : data.labels)
        require(static_cast<std::size_t>(l) < data.bases.size(), ErrorCode::MissingBasis,
                "no basis for label " + std::to_string(l));
    const SubspaceBank bank(data.bases);
    const auto projector = proj.build(bank.ambient_dim(), ctx.seed, ctx);
    auto t0 = Clock::now();
    std::optional<CompressedDetector> compressed;
    if (projector) compressed.emplace(bank, *projector);
    ctx.timing["project"] = ms_since(t0);

    t0 = Clock::now();
    std::vector<int> guess(data.points.rows());
    parallel_for(guess.size(), ctx.threads, [&](std::size_t i) {
        const auto row = data.points.row(i);
        guess[i] = static_cast<int>(compressed ? compressed->detect(row) : detect(bank, row));
    });
    ctx.timing["detect"] = ms_since(t0);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < guess.size(); ++i) errors += guess[i] != data.labels[i];
    const double err = guess.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(guess.size());
    r["mode"] = "labeled";
    r["points"] = guess.size();
    r["errors"] = errors;
    r["error_rate"] = ctx.number(err, "error_rate");
    if (!predictions_out.empty()) {
        write_labels(predictions_out, guess);
        r["predictions"] = predictions_out;
    }
    return r;
}

json cmd_cluster(Context& ctx, const std::string& config_path, const DataFiles& files, const ProjectorChoice& proj,
                 std::size_t seeds, const std::string& predictions_out) {
    if (seeds == 0) config_error("--seeds must be >= 1");
    Config c = load_config(config_path);
    std::optional<Config> synth = c.section("synthetic");
    if (synth && files.given()) config_error("give data files or a synthetic section, not both");
    std::optional<SynthSection> section;
    if (synth) {
        section = read_synth(*synth, 0);
        c.adopt("synthetic", *synth);
    }
    std::size_t default_clusters = 0, default_kmax = OmpParams{}.k_max;
    if (section) {
        default_clusters = section->spec.dims.size();
        default_kmax = *std::max_element(section->spec.dims.begin(), section->spec.dims.end());
    }

    LabeledPoints file_data;
    if (!section) {
        if (files.points.empty()) config_error("no data: pass --in or a synthetic config section");
        file_data.points = read_matrix_csv(files.points, ctx.header);
        if (!files.labels.empty()) file_data.labels = checked_labels(files.labels, file_data.points.rows());
        if (!file_data.labels.empty())
            default_clusters = static_cast<std::size_t>(*std::max_element(file_data.labels.begin(), file_data.labels.end())) + 1;
        ctx.echo["files"] = {{"in", files.points}, {"labels", files.labels}};
    }
    const std::size_t clusters =
        default_clusters ? c.get<std::size_t>("clusters", default_clusters) : c.need<std::size_t>("clusters");
    OmpParams omp;
    omp.k_max = c.get<std::size_t>("k_max", default_kmax);
    omp.residual_tol = c.get<double>("residual_tol", omp.residual_tol);
    c.finish();
    json echo = c.echo();
    echo.update(ctx.echo);
    ctx.echo = echo;
    ctx.echo["seeds"] = seeds;

    json per_seed = json::array();
    json per_seed_timing = json::array();
    std::vector<double> errors;
    std::vector<int> first_labels;
    std::size_t working_dim = 0;
    for (std::size_t k = 0; k < seeds; ++k) {
        const std::uint64_t seed_k = ctx.seed + k;
        LabeledPoints data;
        if (section) {
            SynthSection s = *section;
            s.spec.seed = derive_seed(seed_k, kDataStream);
            UosDataset ds = make_dataset(s);
            data.points = std::move(ds.data);
            data.labels = std::move(ds.labels);
        } else {
            data = file_data;
        }
        const auto projector = proj.build(data.points.cols(), seed_k, ctx);
        const ClusteringResult res = cluster(data.points, clusters, projector ? &*projector : nullptr, omp,
                                             derive_seed(seed_k, kClusterStream),
                                             data.labels.empty() ? nullptr : &data.labels);
        working_dim = projector ? projector->target_dim() : data.points.cols();
        json one;
        one["seed"] = seed_k;
        if (res.error) {
            one["error_rate"] = ctx.number(res.error->rate, "error_rate (seed " + std::to_string(seed_k) + ")");
            if (res.error->approximate) ctx.warnings.push_back("more than 8 labels: error_rate uses greedy matching");
            errors.push_back(res.error->rate);
        } else {
            one["error_rate"] = nullptr;
        }
        per_seed.push_back(one);
        per_seed_timing.push_back({{"seed", seed_k},
                                   {"project", res.timing.project_ms},
                                   {"coefficients", res.timing.coefficients_ms},
                                   {"spectral", res.timing.spectral_ms}});
        if (k == 0) first_labels = res.labels;
    }
    if (errors.empty()) ctx.warnings.push_back("no true labels; error_rate written as null");

    auto phase_median = [&](const char* phase) {
        std::vector<double> v;
        for (const auto& t : per_seed_timing) v.push_back(t[phase].get<double>());
        return median(v);
    };
    ctx.timing["project"] = phase_median("project");
    ctx.timing["coefficients"] = phase_median("coefficients");
    ctx.timing["spectral"] = phase_median("spectral");
    ctx.timing["per_seed"] = per_seed_timing;

    json r;
    r["clusters"] = clusters;
    r["working_dim"] = working_dim;
    r["per_seed"] = per_seed;
    r["error_rate"] = errors.empty() ? json(nullptr) : ctx.number(median(errors), "median error_rate");
    if (!predictions_out.empty()) {
        write_labels(predictions_out, first_labels);
        r["predictions"] = predictions_out;
    }
    return r;
}

// ---------------------------------------------------------------- driver

int report_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
    json e;
    e["error"] = {{"code", code}, {"message", message}, {"exit_code", exit_code}};
    err << e.dump() << '\n';
    return exit_code;
}

std::uint64_t resolve_seed(bool given, std::uint64_t flag, std::vector<std::string>& warnings) {
    if (given) return flag;
    if (const char* env = std::getenv("CSL_SEED"); env && *env) {
        std::uint64_t v = 0;
        const char* end = env + std::char_traits<char>::length(env);
        const auto [ptr, ec] = std::from_chars(env, end, v);
        if (ec != std::errc() || ptr != end) config_error(std::string("CSL_SEED is not an unsigned integer: '") + env + "'");
        return v;
    }
    warnings.push_back("no --seed and no CSL_SEED; using seed 0");
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Compressed subspace learning: angles, distances, random projections and experiments", "csl"};
    app.require_subcommand(1);

    std::uint64_t seed_flag = 0;
    std::size_t threads = default_thread_count();
    bool binary = false, header = false;
    std::string report_path;
    auto* seed_opt = app.add_option("--seed", seed_flag, "Random seed (default: CSL_SEED, else 0)");
    app.add_option("--threads", threads, "Worker threads")->capture_default_str();
    app.add_flag("--binary", binary, "Binary I/O (not supported)");
    app.add_flag("--header", header, "Input CSV files start with a header line");
    app.add_option("--report", report_path, "Also write the result JSON to this file");

    std::string config_path, in, out_path, labels_path, bases_prefix, a_path, b_path, raw_csv, svg_out;
    std::string family = "gaussian", kind = "all";
    std::size_t n = 0, seeds = 1;
    std::vector<std::string> basis_files;
    ProjectorChoice proj;
    std::function<json(Context&)> action;
    std::string command;

    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        return sub;
    };

    auto* synth = add("synth", "Generate a union-of-subspaces data set");
    synth->add_option("--config", config_path, "JSON spec")->required();
    synth->add_option("--out", out_path, "Data CSV, one point per row")->required();
    synth->add_option("--labels", labels_path, "Label file, one integer per line")->required();
    synth->add_option("--bases-out", bases_prefix, "Write each basis to <prefix><l>.csv");
    synth->callback([&] { action = [&](Context& c) { return cmd_synth(c, config_path, out_path, labels_path, bases_prefix); }; });

    auto* project = add("project", "Compress every row with one random projector");
    project->add_option("--in", in, "Input CSV")->required();
    project->add_option("--family", family, "gaussian, rademacher, hadamard or fourier")->capture_default_str();
    project->add_option("--n", n, "Target dimension")->required();
    project->add_option("--out", out_path, "Output CSV")->required();
    project->callback([&] { action = [&](Context& c) { return cmd_project(c, in, family, n, out_path); }; });

    auto* angles = add("angles", "Canonical angles between two subspaces");
    angles->add_option("--a", a_path, "Basis CSV, one spanning vector per row")->required();
    angles->add_option("--b", b_path, "Basis CSV, one spanning vector per row")->required();
    angles->callback([&] { action = [&](Context& c) { return cmd_angles(c, a_path, b_path); }; });

    auto* dist = add("distance", "Subspace distances");
    dist->add_option("--a", a_path, "Basis CSV, one spanning vector per row")->required();
    dist->add_option("--b", b_path, "Basis CSV, one spanning vector per row")->required();
    dist->add_option("--kind", kind, "Distance kind, or all")->capture_default_str();
    dist->callback([&] { action = [&](Context& c) { return cmd_distance(c, a_path, b_path, kind); }; });

    auto* cap = add("capbench", "Angle and distance distortion under random projection");
    cap->add_option("--config", config_path, "JSON experiment config")->required();
    cap->add_option("--raw-csv", raw_csv, "Per-angle raw distortions");
    cap->callback([&] { action = [&](Context& c) { return cmd_capbench(c, config_path, raw_csv); }; });

    DataFiles files;
    auto add_data = [&](CLI::App* sub, bool bases) {
        sub->add_option("--config", config_path, "JSON task config");
        sub->add_option("--in", files.points, "Data CSV");
        sub->add_option("--labels", files.labels, "Label file");
        if (bases) sub->add_option("--basis", files.bases, "Basis CSV for each label, in label order");
        proj.add_to(sub);
    };

    auto* vis = add("visualize", "Embed points by subspace-aware dissimilarity and classical MDS");
    add_data(vis, true);
    vis->add_option("--out", out_path, "Coordinates CSV (x,y[,z],label)");
    vis->add_option("--svg", svg_out, "Scatter plot");
    vis->callback([&] { action = [&](Context& c) { return cmd_visualize(c, config_path, files, proj, out_path, svg_out); }; });

    auto* det = add("detect", "Active subspace detection");
    add_data(det, true);
    det->add_option("--out", out_path, "Predicted labels");
    det->callback([&] { action = [&](Context& c) { return cmd_detect(c, config_path, files, proj, out_path); }; });

    auto* clu = add("cluster", "SSC-OMP subspace clustering");
    add_data(clu, false);
    clu->add_option("--seeds", seeds, "Repeat with seeds seed..seed+K-1 and report the median")->capture_default_str();
    clu->add_option("--out", out_path, "Predicted labels (first seed)");
    clu->callback([&] { action = [&](Context& c) { return cmd_cluster(c, config_path, files, proj, seeds, out_path); }; });

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return report_error(err, "UsageError", e.what(), kExitInput);
    }
    for (auto* sub : app.get_subcommands())
        if (sub->parsed()) command = sub->get_name();

    Context ctx;
    try {
        if (binary) config_error("--binary is not supported; inputs and outputs are CSV");
        if (threads == 0) config_error("--threads must be >= 1");
        ctx.seed = resolve_seed(seed_opt->count() > 0, seed_flag, ctx.warnings);
        ctx.threads = threads;
        ctx.header = header;

        json results = action(ctx);
        json doc;
        doc["tool"] = "csl";
        doc["version"] = CSL_VERSION;
        doc["command"] = command;
        doc["config"] = ctx.echo;
        doc["seed"] = ctx.seed;
        doc["results"] = results;
        doc["timing_ms"] = ctx.timing;
        doc["warnings"] = ctx.warnings;
        const std::string text = doc.dump(2) + "\n";
        if (!report_path.empty()) write_text(report_path, text);
        out << text;
        return kExitOk;
    } catch (const Error& e) {
        return report_error(err, std::string(to_string(e.code())), e.what(),
                            is_numerical(e.code()) ? kExitNumerical : kExitInput);
    } catch (const json::exception& e) {
        return report_error(err, "ConfigError", e.what(), kExitInput);
    } catch (const std::exception& e) {
        return report_error(err, "Internal", e.what(), kExitInternal);
    }
}

}  // namespace csl::cli
