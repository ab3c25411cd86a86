#include "hadfl/metrics.hpp"

#include "hadfl/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hadfl {

namespace {

constexpr const char* kHeader =
    "sync_round\tvirtual_time\tvirtual_time_exact\ttrain_loss\ttest_accuracy\tversions\tselected\ttraffic_bytes\t"
    "session_aborted";

std::string g17(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::string hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double num(const std::string& s, const char* what) {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw IoError(std::string("metrics: bad ") + what + " '" + s + "'");
    return d;
}

std::uint64_t unum(const std::string& s, const char* what) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw IoError(std::string("metrics: bad ") + what + " '" + s + "'");
    return std::stoull(s);
}

}  // namespace

void write_metrics(std::ostream& out, const MetricsFile& file) {
    out << "# scheme=" << file.scheme << " seed=" << file.seed << " config=" << hex(file.config_digest) << "\n"
        << kHeader << "\n";
    for (const auto& r : file.records) {
        std::string versions;
        for (const auto& [id, v] : r.versions)
            versions += (versions.empty() ? "" : ",") + std::to_string(raw(id)) + ":" + g17(v);
        std::string selected;
        for (DeviceId id : r.selected) selected += (selected.empty() ? "" : ",") + std::to_string(raw(id));
        out << r.sync_round << '\t' << g17(to_double(r.virtual_time)) << '\t' << format_rational(r.virtual_time)
            << '\t' << g17(r.train_loss) << '\t' << g17(r.test_accuracy) << '\t' << (versions.empty() ? "-" : versions)
            << '\t' << (selected.empty() ? "-" : selected) << '\t' << r.traffic_bytes << '\t'
            << (r.session_aborted ? 1 : 0) << '\n';
    }
}

std::string format_metrics(const MetricsFile& file) {
    std::ostringstream o;
    write_metrics(o, file);
    return o.str();
}

MetricsFile parse_metrics(std::string_view text) {
    MetricsFile f;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::vector<std::string> words;
            boost::algorithm::split(words, line.substr(1), boost::algorithm::is_space(), boost::algorithm::token_compress_on);
            for (const auto& w : words) {
                const auto eq = w.find('=');
                if (eq == std::string::npos) continue;
                const std::string k = w.substr(0, eq), v = w.substr(eq + 1);
                if (k == "scheme") f.scheme = v;
                if (k == "seed") f.seed = unum(v, "seed");
                if (k == "config") f.config_digest = std::stoull(v, nullptr, 16);
            }
            continue;
        }
        if (!header) {
            if (line != kHeader) throw IoError("metrics: unexpected header line");
            header = true;
            continue;
        }
        std::vector<std::string> cols;
        boost::algorithm::split(cols, line, boost::algorithm::is_any_of("\t"));
        if (cols.size() != 9) throw IoError("metrics: expected 9 columns, got " + std::to_string(cols.size()));
        RoundMetrics r;
        r.sync_round = static_cast<std::uint32_t>(unum(cols[0], "sync_round"));
        try {
            r.virtual_time = parse_rational(cols[2]);
        } catch (const Error&) {
            throw IoError("metrics: bad virtual_time_exact '" + cols[2] + "'");
        }
        r.train_loss = num(cols[3], "train_loss");
        r.test_accuracy = num(cols[4], "test_accuracy");
        if (cols[5] != "-") {
            std::vector<std::string> items;
            boost::algorithm::split(items, cols[5], boost::algorithm::is_any_of(","));
            for (const auto& it : items) {
                const auto colon = it.find(':');
                if (colon == std::string::npos) throw IoError("metrics: bad versions item '" + it + "'");
                r.versions[device(static_cast<std::uint32_t>(unum(it.substr(0, colon), "device")))] =
                    num(it.substr(colon + 1), "version");
            }
        }
        if (cols[6] != "-") {
            std::vector<std::string> items;
            boost::algorithm::split(items, cols[6], boost::algorithm::is_any_of(","));
            for (const auto& it : items) r.selected.push_back(device(static_cast<std::uint32_t>(unum(it, "device"))));
        }
        r.traffic_bytes = unum(cols[7], "traffic_bytes");
        r.session_aborted = unum(cols[8], "session_aborted") != 0;
        f.records.push_back(std::move(r));
    }
    if (!header) throw IoError("metrics: missing header line");
    return f;
}

MetricsFile read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read metrics file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_metrics(ss.str());
}

void save_metrics(const std::filesystem::path& path, const MetricsFile& file) {
    std::ofstream out(path, std::ios::trunc);
    write_metrics(out, file);
    if (!out) throw IoError("cannot write metrics file " + path.string());
}

std::optional<double> time_to_accuracy(const std::vector<RoundMetrics>& records, double target) {
    for (const auto& r : records)
        if (r.test_accuracy >= target) return to_double(r.virtual_time);
    return std::nullopt;
}

namespace {

double inf() { return std::numeric_limits<double>::infinity(); }

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    const double a = xs[n / 2 - 1], b = xs[n / 2];
    return std::isinf(a) || std::isinf(b) ? inf() : (a + b) / 2.0;
}

std::optional<double> median_time(const std::vector<std::optional<double>>& xs) {
    std::vector<double> v;
    for (const auto& x : xs) v.push_back(x.value_or(inf()));
    const double m = median(v);
    if (std::isinf(m)) return std::nullopt;
    return m;
}

std::string fixed(double d, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, d);
    return buf;
}

std::string time_text(const std::optional<double>& t) { return t ? fixed(*t, 3) : "not reached"; }

}  // namespace

Comparison compare_runs(const std::vector<MetricsFile>& files) {
    if (files.size() < 2) throw InvalidArgument("compare: need at least two runs");
    Comparison c;
    std::map<std::string, std::vector<const MetricsFile*>> by_scheme;
    for (const auto& f : files) by_scheme[f.scheme].push_back(&f);

    std::map<std::string, double> best_median;
    for (const auto& [scheme, runs] : by_scheme) {
        std::vector<double> bests;
        for (const auto* f : runs) {
            double b = 0.0;
            for (const auto& r : f->records) b = std::max(b, r.test_accuracy);
            bests.push_back(b);
        }
        best_median[scheme] = median(bests);
    }
    if (best_median.count("sync-allreduce")) {
        c.common_target = 0.95 * best_median.at("sync-allreduce");
        c.common_target_basis = "95% of sync-allreduce median best accuracy";
    } else {
        double lowest = inf();
        for (const auto& [s, b] : best_median) lowest = std::min(lowest, b);
        c.common_target = 0.95 * lowest;
        c.common_target_basis = "95% of the lowest median best accuracy";
    }

    for (const auto& [scheme, runs] : by_scheme) {
        SchemeSummary s;
        s.scheme = scheme;
        s.runs = runs.size();
        std::vector<double> bests;
        std::vector<std::optional<double>> own, common;
        for (const auto* f : runs) {
            RunSummary r;
            r.scheme = scheme;
            r.seed = f->seed;
            for (const auto& m : f->records) r.best_accuracy = std::max(r.best_accuracy, m.test_accuracy);
            r.time_to_own_target = time_to_accuracy(f->records, r.best_accuracy - 0.01);
            r.time_to_common_target = time_to_accuracy(f->records, c.common_target);
            if (!f->records.empty()) {
                r.final_accuracy = f->records.back().test_accuracy;
                r.rounds = f->records.back().sync_round;
            }
            bests.push_back(r.best_accuracy);
            own.push_back(r.time_to_own_target);
            common.push_back(r.time_to_common_target);
            c.runs.push_back(r);
        }
        s.best_accuracy = median(bests);
        s.time_to_own_target = median_time(own);
        s.time_to_common_target = median_time(common);
        c.schemes.push_back(s);
    }
    for (auto& s : c.schemes)
        for (const auto& base : c.schemes) {
            if (base.scheme == s.scheme) continue;
            std::optional<double> ratio;
            if (s.time_to_common_target && base.time_to_common_target && *s.time_to_common_target > 0)
                ratio = *base.time_to_common_target / *s.time_to_common_target;
            s.speedup[base.scheme] = ratio;
        }
    return c;
}

std::string format_comparison(const Comparison& c) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"scheme", "runs", "best_acc", "t(best-1pt)", "t(common)", "speedup"});
    for (const auto& s : c.schemes) {
        std::string sp;
        for (const auto& [base, ratio] : s.speedup)
            sp += (sp.empty() ? "" : " ") + ("vs " + base + "=" + (ratio ? fixed(*ratio, 2) + "x" : "not reached"));
        rows.push_back({s.scheme, std::to_string(s.runs), fixed(s.best_accuracy, 4), time_text(s.time_to_own_target),
                        time_text(s.time_to_common_target), sp.empty() ? "-" : sp});
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    std::ostringstream o;
    o << "common target: accuracy " << fixed(c.common_target, 4) << " (" << c.common_target_basis << ")\n"
      << "times are virtual seconds, medians over runs\n\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            o << r[i];
            if (i + 1 < r.size()) o << std::string(width[i] - r[i].size() + 2, ' ');
        }
        o << '\n';
    }
    return o.str();
}

std::string comparison_json(const Comparison& c) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["common_target"] = c.common_target;
    j["common_target_basis"] = c.common_target_basis;
    j["schemes"] = json::array();
    for (const auto& s : c.schemes) {
        json sp = json::object();
        for (const auto& [base, ratio] : s.speedup) sp[base] = opt(ratio);
        j["schemes"].push_back({{"scheme", s.scheme},
                                {"runs", s.runs},
                                {"best_accuracy", s.best_accuracy},
                                {"time_to_own_target", opt(s.time_to_own_target)},
                                {"time_to_common_target", opt(s.time_to_common_target)},
                                {"speedup", sp}});
    }
    j["runs"] = json::array();
    for (const auto& r : c.runs)
        j["runs"].push_back({{"scheme", r.scheme},
                             {"seed", r.seed},
                             {"best_accuracy", r.best_accuracy},
                             {"final_accuracy", r.final_accuracy},
                             {"rounds", r.rounds},
                             {"time_to_own_target", opt(r.time_to_own_target)},
                             {"time_to_common_target", opt(r.time_to_common_target)}});
    return j.dump(2) + "\n";
}

}  // namespace hadfl
