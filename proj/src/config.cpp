#include "hadfl/config.hpp"

#include "hadfl/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hadfl {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) { return boost::algorithm::trim_copy(std::string(s)); }

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> parts;
    const std::string t = trim(text);
    if (t.empty()) return parts;
    boost::algorithm::split(parts, t, boost::algorithm::is_any_of(","));
    for (auto& p : parts) p = trim(p);
    return parts;
}

std::uint64_t to_uint(const std::string& v, const std::string& field) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || v.empty()) throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& v, const std::string& field) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a number, got '" + v + "'");
    }
}

Rational to_rational(const std::string& v, const std::string& field) {
    try {
        return parse_rational(v);
    } catch (const Error&) {
        throw ConfigError(field, "expected an exact decimal or p/q value, got '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& field) {
    const std::string l = boost::algorithm::to_lower_copy(v);
    if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
    if (l == "false" || l == "no" || l == "0" || l == "off") return false;
    throw ConfigError(field, "expected true or false, got '" + v + "'");
}

std::string fmt_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

template <class F>
auto wrap(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    using C = ExperimentConfig;
    using S = const std::string&;
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"experiment",
         {
             {"name", [](C& c, S v, S) { c.name = v; }},
             {"scheme", [](C& c, S v, S f) { c.scheme = wrap(f, [&] { return parse_scheme(v); }); }},
             {"seeds",
              [](C& c, S v, S f) {
                  c.seeds.clear();
                  for (const auto& s : split_list(v)) c.seeds.push_back(to_uint(s, f));
              }},
             {"output_dir", [](C& c, S v, S) { c.output_dir = v; }},
         }},
        {"model",
         {
             {"kind", [](C& c, S v, S f) { c.model.kind = wrap(f, [&] { return parse_model_kind(v); }); }},
             {"input_dim", [](C& c, S v, S f) { c.model.input_dim = to_uint(v, f); }},
             {"hidden_dim", [](C& c, S v, S f) { c.model.hidden_dim = to_uint(v, f); }},
             {"output_dim", [](C& c, S v, S f) { c.model.output_dim = to_uint(v, f); }},
             {"loss", [](C& c, S v, S f) { c.model.loss = wrap(f, [&] { return parse_loss_kind(v); }); }},
             {"bias", [](C& c, S v, S f) { c.model.bias = to_bool(v, f); }},
         }},
        {"data",
         {
             {"task", [](C& c, S v, S f) { c.task = wrap(f, [&] { return parse_task(v); }); }},
             {"train_samples", [](C& c, S v, S f) { c.train_samples = to_uint(v, f); }},
             {"test_samples", [](C& c, S v, S f) { c.test_samples = to_uint(v, f); }},
             {"partition", [](C& c, S v, S f) { c.partition = wrap(f, [&] { return parse_partition(v); }); }},
             {"margin", [](C& c, S v, S f) { c.data.margin = to_double(v, f); }},
             {"spread", [](C& c, S v, S f) { c.data.spread = to_double(v, f); }},
             {"orth_spread", [](C& c, S v, S f) { c.data.orth_spread = to_double(v, f); }},
             {"offset", [](C& c, S v, S f) { c.data.offset = to_double(v, f); }},
             {"noise_stddev", [](C& c, S v, S f) { c.data.noise_stddev = to_double(v, f); }},
         }},
        {"training",
         {
             {"learning_rate", [](C& c, S v, S f) { c.hp.learning_rate = to_double(v, f); }},
             {"batch_size", [](C& c, S v, S f) { c.hp.batch_size = to_uint(v, f); }},
             {"warmup_lr", [](C& c, S v, S f) { c.hp.warmup_lr = to_double(v, f); }},
             {"t_total", [](C& c, S v, S f) { c.t_total = static_cast<unsigned>(to_uint(v, f)); }},
             {"dfedavg_local_epochs",
              [](C& c, S v, S f) { c.dfedavg_local_epochs = static_cast<unsigned>(to_uint(v, f)); }},
             {"convergence_tol", [](C& c, S v, S f) { c.convergence_tol = to_double(v, f); }},
             {"convergence_window",
              [](C& c, S v, S f) { c.convergence_window = static_cast<unsigned>(to_uint(v, f)); }},
             {"checkpoint_every", [](C& c, S v, S f) { c.checkpoint_every = static_cast<unsigned>(to_uint(v, f)); }},
         }},
        {"cluster",
         {
             {"powers",
              [](C& c, S v, S f) {
                  c.powers.clear();
                  for (const auto& s : split_list(v)) c.powers.push_back(to_rational(s, f));
              }},
             {"unit_epoch_time", [](C& c, S v, S f) { c.unit_epoch_time = to_rational(v, f); }},
             {"compute_noise", [](C& c, S v, S f) { c.compute_noise = to_double(v, f); }},
         }},
        {"hadfl",
         {
             {"t_sync", [](C& c, S v, S f) { c.t_sync = static_cast<unsigned>(to_uint(v, f)); }},
             {"n_p", [](C& c, S v, S f) { c.n_p = to_uint(v, f); }},
             {"alpha", [](C& c, S v, S f) { c.alpha = to_double(v, f); }},
             {"sigma_mode",
              [](C& c, S v, S f) { c.sigma_mode = wrap(f, [&] { return parse_sigma_mode(v); }); }},
             {"beta", [](C& c, S v, S f) { c.beta = to_double(v, f); }},
             {"warmup_epochs", [](C& c, S v, S f) { c.warmup_epochs = static_cast<unsigned>(to_uint(v, f)); }},
             {"time_quantum", [](C& c, S v, S f) { c.time_quantum = to_rational(v, f); }},
             {"max_group_size", [](C& c, S v, S f) { c.max_group_size = to_uint(v, f); }},
             {"inter_sync_multiple",
              [](C& c, S v, S f) { c.inter_sync_multiple = static_cast<unsigned>(to_uint(v, f)); }},
             {"selection", [](C& c, S v, S) { c.selection = parse_selection_override(v); }},
             {"version_source", [](C& c, S v, S) { c.version_source = parse_version_source(v); }},
         }},
        {"network",
         {
             {"latency_base", [](C& c, S v, S f) { c.latency.base = to_rational(v, f); }},
             {"latency_jitter", [](C& c, S v, S f) { c.latency.jitter = to_rational(v, f); }},
             {"latency_per_byte", [](C& c, S v, S f) { c.latency.per_byte = to_rational(v, f); }},
             {"heartbeat_interval", [](C& c, S v, S f) { c.heartbeat_interval = to_rational(v, f); }},
             {"liveness_timeout", [](C& c, S v, S f) { c.liveness_timeout = to_rational(v, f); }},
         }},
        {"failures",
         {
             {"events", [](C& c, S v, S f) { c.failures = wrap(f, [&] { return parse_failures(v); }); }},
         }},
    };
    return table;
}

}  // namespace

FailureScript parse_failures(std::string_view text) {
    FailureScript script;
    for (const auto& item : split_list(text)) {
        const auto at = item.find('@');
        if (at == std::string::npos) throw ConfigError("failures.events", "expected dev@time[-time], got '" + item + "'");
        FailureEvent ev;
        ev.device = device(static_cast<std::uint32_t>(to_uint(trim(item.substr(0, at)), "failures.events")));
        const std::string times = trim(item.substr(at + 1));
        const auto dash = times.find('-', 1);
        ev.disconnect_at = to_rational(trim(times.substr(0, dash)), "failures.events");
        if (dash != std::string::npos) ev.reconnect_at = to_rational(trim(times.substr(dash + 1)), "failures.events");
        script.events.push_back(ev);
    }
    return script;
}

std::string format_failures(const FailureScript& script) {
    std::string out;
    for (const auto& ev : script.events) {
        if (!out.empty()) out += ", ";
        out += std::to_string(raw(ev.device)) + "@" + format_rational(ev.disconnect_at);
        if (ev.reconnect_at) out += "-" + format_rational(*ev.reconnect_at);
    }
    return out;
}

ExperimentConfig parse_config(std::string_view text) {
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", "line " + std::to_string(e.line()) + ": " + e.message());
    }
    ExperimentConfig c;
    bool loss_given = false;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        auto sec = table.find(section);
        if (sec == table.end()) {
            if (body.empty()) throw ConfigError(section, "key outside any section");
            throw ConfigError(section, "unknown section");
        }
        for (const auto& [key, node] : body) {
            const std::string field = section + "." + key;
            auto set = sec->second.find(key);
            if (set == sec->second.end()) throw ConfigError(field, "unknown key");
            set->second(c, trim(node.get_value<std::string>()), field);
            if (field == "model.loss") loss_given = true;
        }
    }
    if (!loss_given)
        c.model.loss = c.model.kind == ModelKind::linear_regression ? LossKind::squared_error : LossKind::cross_entropy;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream o;
    auto list = [](const auto& xs, auto fmt) {
        std::string s;
        for (const auto& x : xs) s += (s.empty() ? "" : ", ") + fmt(x);
        return s;
    };
    o << "[experiment]\n"
      << "name = " << c.name << "\n"
      << "scheme = " << to_string(c.scheme) << "\n"
      << "seeds = " << list(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
      << "output_dir = " << c.output_dir << "\n\n"
      << "[model]\n"
      << "kind = " << to_string(c.model.kind) << "\n"
      << "input_dim = " << c.model.input_dim << "\n"
      << "hidden_dim = " << c.model.hidden_dim << "\n"
      << "output_dim = " << c.model.output_dim << "\n"
      << "loss = " << to_string(c.model.loss) << "\n"
      << "bias = " << (c.model.bias ? "true" : "false") << "\n\n"
      << "[data]\n"
      << "task = " << to_string(c.task) << "\n"
      << "train_samples = " << c.train_samples << "\n"
      << "test_samples = " << c.test_samples << "\n"
      << "partition = " << to_string(c.partition) << "\n"
      << "margin = " << fmt_double(c.data.margin) << "\n"
      << "spread = " << fmt_double(c.data.spread) << "\n"
      << "orth_spread = " << fmt_double(c.data.orth_spread) << "\n"
      << "offset = " << fmt_double(c.data.offset) << "\n"
      << "noise_stddev = " << fmt_double(c.data.noise_stddev) << "\n\n"
      << "[training]\n"
      << "learning_rate = " << fmt_double(c.hp.learning_rate) << "\n"
      << "batch_size = " << c.hp.batch_size << "\n"
      << "warmup_lr = " << fmt_double(c.hp.warmup_lr) << "\n"
      << "t_total = " << c.t_total << "\n"
      << "dfedavg_local_epochs = " << c.dfedavg_local_epochs << "\n"
      << "convergence_tol = " << fmt_double(c.convergence_tol) << "\n"
      << "convergence_window = " << c.convergence_window << "\n"
      << "checkpoint_every = " << c.checkpoint_every << "\n\n"
      << "[cluster]\n"
      << "powers = " << list(c.powers, [](const Rational& r) { return format_rational(r); }) << "\n"
      << "unit_epoch_time = " << format_rational(c.unit_epoch_time) << "\n"
      << "compute_noise = " << fmt_double(c.compute_noise) << "\n\n"
      << "[hadfl]\n"
      << "t_sync = " << c.t_sync << "\n"
      << "n_p = " << c.n_p << "\n"
      << "alpha = " << fmt_double(c.alpha) << "\n"
      << "sigma_mode = " << to_string(c.sigma_mode) << "\n"
      << "beta = " << fmt_double(c.beta) << "\n"
      << "warmup_epochs = " << c.warmup_epochs << "\n"
      << "time_quantum = " << format_rational(c.time_quantum) << "\n"
      << "max_group_size = " << c.max_group_size << "\n"
      << "inter_sync_multiple = " << c.inter_sync_multiple << "\n"
      << "selection = " << to_string(c.selection) << "\n"
      << "version_source = " << to_string(c.version_source) << "\n\n"
      << "[network]\n"
      << "latency_base = " << format_rational(c.latency.base) << "\n"
      << "latency_jitter = " << format_rational(c.latency.jitter) << "\n"
      << "latency_per_byte = " << format_rational(c.latency.per_byte) << "\n"
      << "heartbeat_interval = " << format_rational(c.heartbeat_interval) << "\n"
      << "liveness_timeout = " << format_rational(c.liveness_timeout) << "\n\n"
      << "[failures]\n"
      << "events = " << format_failures(c.failures) << "\n";
    return o.str();
}

std::uint64_t config_digest(const ExperimentConfig& config) { return fnv1a(emit_config(config)); }

}  // namespace hadfl
