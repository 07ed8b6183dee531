#include "rscn/tasks.hpp"

#include "rscn/error.hpp"
#include "rscn/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rscn {

using nlohmann::json;

void SupervisedSequence::validate() const
{
    if (inputs.cols() != targets.cols())
        throw contract_violation("sequence '" + name + "': inputs and targets differ in length");
    if (washout < 0 || washout >= inputs.cols())
        throw contract_violation("sequence '" + name + "': washout " + std::to_string(washout)
                                 + " must be below length " + std::to_string(inputs.cols()));
    if (!inputs.allFinite() || !targets.allFinite())
        throw contract_violation("sequence '" + name + "' contains non-finite values");
}

// ---------------------------------------------------------------------------

void MGParams::validate() const
{
    if (tau < 1) throw contract_violation("Mackey-Glass delay must be >= 1");
    if (!(dt > 0.0)) throw contract_violation("Mackey-Glass step must be positive");
    if (length < 1) throw contract_violation("Mackey-Glass length must be positive");
    if (init_high < init_low) throw contract_violation("empty Mackey-Glass init range");
    const double per_unit = 1.0 / dt;
    if (std::abs(per_unit - std::round(per_unit)) > 1e-9)
        throw contract_violation("Mackey-Glass step must divide the unit interval");
}

std::vector<double> mackey_glass(const MGParams& p, Rng& rng)
{
    p.validate();
    const auto sub = static_cast<long>(std::lround(1.0 / p.dt));
    const long delay = p.tau * sub;

    // Unit-time history y(-tau..0), linearly interpolated onto the fine grid.
    std::vector<double> coarse(static_cast<std::size_t>(p.tau) + 1);
    std::uniform_real_distribution<double> init(p.init_low, p.init_high);
    for (auto& v : coarse) v = p.constant_history ? *p.constant_history : init(rng);

    const long steps = static_cast<long>(p.length) * sub;
    std::vector<double> buf(static_cast<std::size_t>(delay + steps + 1));
    for (long k = 0; k <= delay; ++k) {
        const long c = k / sub;
        const double frac = static_cast<double>(k % sub) / static_cast<double>(sub);
        const double lo = coarse[static_cast<std::size_t>(c)];
        const double hi = c + 1 <= p.tau ? coarse[static_cast<std::size_t>(c + 1)] : lo;
        buf[static_cast<std::size_t>(k)] = frac == 0.0 ? lo : lo + frac * (hi - lo);
    }

    auto rhs = [&](double y, double yd) {
        return p.upsilon * y + p.alpha_mg * yd / (1.0 + std::pow(yd, p.exponent));
    };

    // buf index delay + k holds y(k * dt).
    for (long k = 0; k < steps; ++k) {
        const auto i = static_cast<std::size_t>(delay + k);
        const double y = buf[i];
        const double yd = buf[i - static_cast<std::size_t>(delay)];
        const double yd_mid = 0.5 * (yd + buf[i - static_cast<std::size_t>(delay) + 1]);
        const double k1 = rhs(y, yd);
        const double k2 = rhs(y + 0.5 * p.dt * k1, yd_mid);
        buf[i + 1] = y + p.dt * k2;
    }

    std::vector<double> out(static_cast<std::size_t>(p.length));
    for (long n = 1; n <= p.length; ++n)
        out[static_cast<std::size_t>(n - 1)] = buf[static_cast<std::size_t>(delay + n * sub)];
    return out;
}

MGVariant parse_mg_variant(std::string_view s)
{
    if (s == "mg" || s == "MG") return MGVariant::mg;
    if (s == "mg1" || s == "MG1") return MGVariant::mg1;
    if (s == "mg2" || s == "MG2") return MGVariant::mg2;
    throw schema_error("unknown Mackey-Glass variant '" + std::string(s) + "'");
}

std::string_view to_string(MGVariant v)
{
    switch (v) {
    case MGVariant::mg: return "MG";
    case MGVariant::mg1: return "MG1";
    case MGVariant::mg2: return "MG2";
    }
    return "MG";
}

std::vector<int> mg_input_lags(MGVariant v)
{
    switch (v) {
    case MGVariant::mg: return {0, 6, 12, 18};
    case MGVariant::mg1: return {6, 12, 18};
    case MGVariant::mg2: return {12, 18};
    }
    return {};
}

namespace {

constexpr int mg_max_lag = 18;
constexpr int mg_lead = 6;

SupervisedSequence slice(const SupervisedSequence& s, Index begin, Index count, Index washout,
                         std::string name)
{
    SupervisedSequence out;
    out.inputs = s.inputs.middleCols(begin, count);
    out.targets = s.targets.middleCols(begin, count);
    out.washout = washout;
    out.name = std::move(name);
    return out;
}

} // namespace

Index mg_first_index()
{
    return mg_max_lag;
}

TaskSplits mg_task(const std::vector<double>& series, MGVariant variant, const MGSplitSpec& splits)
{
    const auto len = static_cast<Index>(series.size());
    if (len < mg_max_lag + mg_lead + 1)
        throw contract_violation("Mackey-Glass series too short: " + std::to_string(len)
                                 + " points, need at least 25");
    const Index first = mg_first_index();
    const Index count = len - mg_lead - first;
    if (splits.n_train + splits.n_validation >= count)
        throw contract_violation("Mackey-Glass series too short for the requested splits");

    const auto lags = mg_input_lags(variant);
    SupervisedSequence all;
    all.inputs.resize(static_cast<Index>(lags.size()), count);
    all.targets.resize(1, count);
    for (Index s = 0; s < count; ++s) {
        const Index n = first + s;
        for (std::size_t c = 0; c < lags.size(); ++c)
            all.inputs(static_cast<Index>(c), s) = series[static_cast<std::size_t>(n - lags[c])];
        all.targets(0, s) = series[static_cast<std::size_t>(n + mg_lead)];
    }

    const std::string base(to_string(variant));
    TaskSplits out;
    out.train = slice(all, 0, splits.n_train, splits.washout, base + "/train");
    out.validation = slice(all, splits.n_train, splits.n_validation, splits.washout,
                           base + "/validation");
    const Index test_begin = splits.n_train + splits.n_validation;
    out.test = slice(all, test_begin, count - test_begin, splits.washout, base + "/test");
    out.train.validate();
    out.validation.validate();
    out.test.validate();
    return out;
}

// ---------------------------------------------------------------------------

double plant_test_input(Index n)
{
    constexpr double pi = std::numbers::pi;
    const auto t = static_cast<double>(n);
    if (n < 250) return std::sin(pi * t / 25.0);
    if (n < 500) return 1.0;
    if (n < 750) return -1.0;
    return 0.6 * std::cos(pi * t / 10.0) + 0.1 * std::cos(pi * t / 32.0)
           + 0.3 * std::sin(pi * t / 25.0);
}

std::vector<double> plant_response(const PlantParams& p, const std::vector<double>& u)
{
    const std::size_t count = u.size();
    std::vector<double> y(count + 1, 0.0);
    // y[i] holds y(i + 1); u[i] holds u(i + 1).
    for (std::size_t i = 0; i < 4 && i < y.size(); ++i) y[i] = p.initial_outputs[i];
    for (std::size_t n = 4; n <= count; ++n) {
        const double un = u[n - 1];
        const double un2 = u[n - 3];
        const double un3 = u[n - 4];
        y[n] = p.c_y * y[n - 1] + p.c_yu * y[n - 2] * un + p.c_u2 * un2 * un2 + p.c_u3 * un3;
    }
    return y;
}

SupervisedSequence plant_sequence(const PlantParams& p, const std::vector<double>& u,
                                  std::string name)
{
    const auto y = plant_response(p, u);
    const auto count = static_cast<Index>(u.size());
    SupervisedSequence seq;
    seq.inputs.resize(2, count);
    seq.targets.resize(1, count);
    for (Index n = 0; n < count; ++n) {
        seq.inputs(0, n) = y[static_cast<std::size_t>(n)];
        seq.inputs(1, n) = u[static_cast<std::size_t>(n)];
        seq.targets(0, n) = y[static_cast<std::size_t>(n + 1)];
    }
    seq.washout = p.washout;
    seq.name = std::move(name);
    return seq;
}

SupervisedSequence plant_simulate(const PlantParams& p, PlantPhase phase, Rng& rng)
{
    std::vector<double> u;
    if (phase == PlantPhase::train) {
        u.resize(static_cast<std::size_t>(p.n_train + p.n_validation));
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (auto& v : u) v = dist(rng);
        return plant_sequence(p, u, "plant/train");
    }
    u.resize(static_cast<std::size_t>(p.n_test));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = plant_test_input(static_cast<Index>(i + 1));
    return plant_sequence(p, u, "plant/test");
}

TaskSplits plant_task(const PlantParams& p, Rng& rng)
{
    const auto run = plant_simulate(p, PlantPhase::train, rng);
    TaskSplits out;
    out.train = slice(run, 0, p.n_train, p.washout, "plant/train");
    out.validation = slice(run, p.n_train, p.n_validation, p.washout, "plant/validation");
    out.test = plant_simulate(p, PlantPhase::test, rng);
    out.train.validate();
    out.validation.validate();
    out.test.validate();
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

CsvTable read_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw schema_error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw schema_error(path.string() + ": missing header row");
    for (auto h : split_commas(line)) t.header.emplace_back(h);
    t.columns.resize(t.header.size());

    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != t.header.size())
            throw schema_error(path.string() + ":" + std::to_string(line_no) + ": expected "
                               + std::to_string(t.header.size()) + " cells, got "
                               + std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const auto cell = cells[c];
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw schema_error(path.string() + ":" + std::to_string(line_no)
                                   + ": cannot parse '" + std::string(cell) + "' in column '"
                                   + t.header[c] + "'");
            t.columns[c].push_back(v);
        }
    }
    return t;
}

std::size_t column_index(const CsvTable& t, const std::string& name)
{
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw schema_error("missing column '" + name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
}

void append_number(std::string& out, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

} // namespace

SupervisedSequence load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                            const std::vector<LagFeature>& features)
{
    const auto table = read_table(path);
    if (!schema.columns.empty() && table.header != schema.columns) {
        std::string got;
        for (const auto& h : table.header) got += (got.empty() ? "" : ",") + h;
        throw schema_error(path.string() + ": header '" + got + "' does not match the schema");
    }
    if (features.empty()) throw contract_violation("at least one input feature is required");

    const auto target_col = column_index(table, schema.target);
    int max_lag = 0;
    std::vector<std::vector<std::size_t>> feature_cols;
    for (const auto& f : features) {
        if (f.lag < 0 || f.channels.empty())
            throw contract_violation("lag features need a non-negative lag and a channel");
        max_lag = std::max(max_lag, f.lag);
        std::vector<std::size_t> cols;
        for (const auto& ch : f.channels) cols.push_back(column_index(table, ch));
        feature_cols.push_back(std::move(cols));
    }

    const auto rows = static_cast<Index>(table.columns[target_col].size());
    const Index count = rows - max_lag;
    if (count < 1) throw schema_error(path.string() + ": not enough rows for the requested lags");

    SupervisedSequence seq;
    seq.inputs.resize(static_cast<Index>(features.size()), count);
    seq.targets.resize(1, count);
    for (Index s = 0; s < count; ++s) {
        const Index row = s + max_lag;
        for (std::size_t f = 0; f < features.size(); ++f) {
            double acc = 0.0;
            for (auto c : feature_cols[f])
                acc += table.columns[c][static_cast<std::size_t>(row - features[f].lag)];
            seq.inputs(static_cast<Index>(f), s) = acc / static_cast<double>(feature_cols[f].size());
        }
        seq.targets(0, s) = table.columns[target_col][static_cast<std::size_t>(row)];
    }
    seq.name = path.stem().string();
    return seq;
}

std::string sequence_to_csv(const SupervisedSequence& seq)
{
    std::string out;
    for (Index k = 0; k < seq.inputs.rows(); ++k) out += "u" + std::to_string(k + 1) + ",";
    for (Index l = 0; l < seq.targets.rows(); ++l) {
        out += seq.targets.rows() == 1 ? "y" : "y" + std::to_string(l + 1);
        out += l + 1 < seq.targets.rows() ? "," : "";
    }
    out += '\n';
    for (Index n = 0; n < seq.length(); ++n) {
        for (Index k = 0; k < seq.inputs.rows(); ++k) {
            append_number(out, seq.inputs(k, n));
            out += ',';
        }
        for (Index l = 0; l < seq.targets.rows(); ++l) {
            append_number(out, seq.targets(l, n));
            out += l + 1 < seq.targets.rows() ? "," : "";
        }
        out += '\n';
    }
    return out;
}

void write_csv(const SupervisedSequence& seq, const std::filesystem::path& path)
{
    write_file_atomic(path, sequence_to_csv(seq));
}

SupervisedSequence read_sequence_csv(const std::filesystem::path& path, Index washout)
{
    const auto table = read_table(path);
    std::vector<std::size_t> in_cols;
    std::vector<std::size_t> out_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const auto& h = table.header[c];
        if (!h.empty() && h[0] == 'u')
            in_cols.push_back(c);
        else if (!h.empty() && h[0] == 'y')
            out_cols.push_back(c);
        else
            throw schema_error(path.string() + ": unexpected column '" + h + "'");
    }
    if (in_cols.empty() || out_cols.empty())
        throw schema_error(path.string() + ": needs u* input and y* target columns");
    const auto n = static_cast<Index>(table.columns[0].size());
    SupervisedSequence seq;
    seq.inputs.resize(static_cast<Index>(in_cols.size()), n);
    seq.targets.resize(static_cast<Index>(out_cols.size()), n);
    for (Index t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < in_cols.size(); ++k)
            seq.inputs(static_cast<Index>(k), t) = table.columns[in_cols[k]][static_cast<std::size_t>(t)];
        for (std::size_t l = 0; l < out_cols.size(); ++l)
            seq.targets(static_cast<Index>(l), t) = table.columns[out_cols[l]][static_cast<std::size_t>(t)];
    }
    seq.washout = washout;
    seq.name = path.stem().string();
    return seq;
}

std::vector<LagFeature> debutanizer_full_features()
{
    return {{{"u1"}, 0}, {{"u2"}, 0}, {{"u3"}, 0},       {{"u4"}, 0},
            {{"u5"}, 0}, {{"u5"}, 1}, {{"u5"}, 2},       {{"u5"}, 3},
            {{"u1", "u2"}, 0},        {{"y"}, 1},        {{"y"}, 2},
            {{"y"}, 3},  {{"y"}, 4}};
}

std::vector<LagFeature> debutanizer_reduced_features()
{
    return {{{"u1"}, 0}, {{"u2"}, 0}, {{"u3"}, 0}, {{"u4"}, 0}, {{"u5"}, 0}, {{"y"}, 1}};
}

std::vector<LagFeature> power_load_features()
{
    return {{{"u1"}, 0}, {{"u2"}, 0}, {{"u3"}, 0}, {{"u4"}, 0}, {{"y"}, 1}};
}

// ---------------------------------------------------------------------------

SupervisedSequence add_gaussian_noise(const SupervisedSequence& seq, double sigma, Rng& rng)
{
    if (!(sigma >= 0.0)) throw contract_violation("noise sigma must be non-negative");
    SupervisedSequence out = seq;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> noise(0.0, sigma);
    for (Index n = 0; n < out.targets.cols(); ++n)
        for (Index l = 0; l < out.targets.rows(); ++l) out.targets(l, n) += noise(rng);
    return out;
}

double target_std(const SupervisedSequence& seq)
{
    const auto& t = seq.targets;
    if (t.size() == 0) return 0.0;
    const double mean = t.mean();
    return std::sqrt((t.array() - mean).square().mean());
}

// ---------------------------------------------------------------------------

TaskManifest TaskManifest::from_json(const json& j)
{
    if (!j.is_object() || !j.contains("generator"))
        throw schema_error("task manifest needs a 'generator' field");
    return TaskManifest{j};
}

TaskManifest TaskManifest::from_name(std::string_view name, std::uint64_t seed)
{
    json j;
    j["seed"] = seed;
    if (name == "mg" || name == "mg1" || name == "mg2") {
        j["generator"] = "mg";
        j["variant"] = std::string(name);
    } else if (name == "plant") {
        j["generator"] = "plant";
    } else if (name.substr(0, 4) == "csv:") {
        j["generator"] = "csv";
        j["path"] = std::string(name.substr(4));
    } else {
        throw schema_error("unknown task '" + std::string(name) + "'");
    }
    return TaskManifest{j};
}

std::string TaskManifest::name() const
{
    const auto gen = doc.value("generator", std::string("?"));
    if (gen == "mg") return std::string(to_string(parse_mg_variant(doc.value("variant", "mg"))));
    if (gen == "plant") return "plant";
    return std::filesystem::path(doc.value("path", std::string("csv"))).stem().string();
}

namespace {

std::vector<LagFeature> features_from_json(const json& f, const std::vector<std::string>& header,
                                           const std::string& target)
{
    if (f.is_string()) {
        const auto s = f.get<std::string>();
        if (s == "debutanizer_reduced") return debutanizer_reduced_features();
        if (s == "debutanizer_full") return debutanizer_full_features();
        if (s == "power_load") return power_load_features();
        if (s == "auto") {
            std::vector<LagFeature> out;
            for (const auto& h : header)
                if (h != target) out.push_back({{h}, 0});
            out.push_back({{target}, 1});
            return out;
        }
        throw schema_error("unknown feature map '" + s + "'");
    }
    std::vector<LagFeature> out;
    for (const auto& item : f) {
        LagFeature lf;
        if (item.at("channels").is_string())
            lf.channels = {item.at("channels").get<std::string>()};
        else
            lf.channels = item.at("channels").get<std::vector<std::string>>();
        lf.lag = item.value("lag", 0);
        out.push_back(std::move(lf));
    }
    return out;
}

std::vector<std::string> read_header(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw schema_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw schema_error(path.string() + ": missing header row");
    std::vector<std::string> out;
    for (auto h : split_commas(line)) out.emplace_back(h);
    return out;
}

} // namespace

TaskSplits build_task(const TaskManifest& manifest)
{
    const auto& j = manifest.doc;
    try {
        const auto seed = j.value("seed", std::uint64_t{0});
        const auto gen = j.at("generator").get<std::string>();
        const json splits = j.value("splits", json::object());

        if (gen == "mg") {
            MGParams p;
            p.length = j.value("length", p.length);
            p.dt = j.value("dt", p.dt);
            MGSplitSpec spec;
            spec.n_train = splits.value("train", spec.n_train);
            spec.n_validation = splits.value("validation", spec.n_validation);
            spec.washout = j.value("washout", spec.washout);
            auto rng = make_rng(seed, "task");
            const auto series = mackey_glass(p, rng);
            return mg_task(series, parse_mg_variant(j.value("variant", "mg")), spec);
        }
        if (gen == "plant") {
            PlantParams p;
            p.n_train = splits.value("train", p.n_train);
            p.n_validation = splits.value("validation", p.n_validation);
            p.n_test = splits.value("test", p.n_test);
            p.washout = j.value("washout", p.washout);
            auto rng = make_rng(seed, "task");
            return plant_task(p, rng);
        }
        if (gen == "csv") {
            const std::filesystem::path path = j.at("path").get<std::string>();
            const auto header = read_header(path);
            CsvSchema schema;
            schema.columns = j.value("schema", header);
            schema.target = j.value("target", std::string("y"));
            const auto features =
                features_from_json(j.value("features", json("auto")), schema.columns, schema.target);
            auto all = load_csv(path, schema, features);
            const Index washout = j.value("washout", Index{100});
            const Index n = all.length();
            const Index n_train = splits.value("train", n * 2 / 3);
            const Index n_test = splits.value("test", n - n_train);
            if (n_train < 1 || n_test < 1 || n_train + n_test > n)
                throw schema_error("CSV splits exceed the " + std::to_string(n) + " usable rows");
            TaskSplits out;
            out.train = slice(all, 0, n_train, washout, all.name + "/train");
            out.test = slice(all, n_train, n_test, washout, all.name + "/test");
            if (splits.contains("validation")) {
                const Index n_val = splits.at("validation").get<Index>();
                if (n_train + n_test + n_val > n)
                    throw schema_error("CSV validation split exceeds the usable rows");
                out.validation = slice(all, n_train + n_test, n_val, washout, all.name + "/validation");
            } else {
                // Validation set = test set with additive Gaussian noise.
                const double frac = j.value("noise_fraction", 0.05);
                auto rng = make_rng(seed, "noise");
                out.validation = add_gaussian_noise(out.test, frac * target_std(out.test), rng);
                out.validation.name = all.name + "/validation";
            }
            out.train.validate();
            out.validation.validate();
            out.test.validate();
            return out;
        }
        throw schema_error("unknown generator '" + gen + "'");
    } catch (const json::exception& e) {
        throw schema_error(std::string("malformed task manifest: ") + e.what());
    }
}

} // namespace rscn
