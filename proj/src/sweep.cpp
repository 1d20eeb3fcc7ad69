#include "mlz/sweep.hpp"

#include "mlz/scattering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace mlz {

namespace {

std::size_t parse_index(std::string_view& rest, std::string_view whole) {
    if (rest.empty() || rest.front() != '[') {
        throw InputError("parameter path '" + std::string(whole) + "': expected '['");
    }
    const auto close = rest.find(']');
    if (close == std::string_view::npos) {
        throw InputError("parameter path '" + std::string(whole) + "': missing ']'");
    }
    std::size_t v = 0;
    const auto body = rest.substr(1, close - 1);
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size() || v == 0) {
        throw InputError("parameter path '" + std::string(whole) + "': bad index '" +
                         std::string(body) + "'");
    }
    rest.remove_prefix(close + 1);
    return v - 1;
}

double parse_number(std::string_view tok) {
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw InputError("not a number: '" + std::string(tok) + "'");
    }
    return v;
}

} // namespace

ParameterPath ParameterPath::parse(std::string_view text) {
    ParameterPath p;
    std::string_view rest = text;
    if (!rest.empty() && rest.front() == '-') {
        p.negate = true;
        rest.remove_prefix(1);
    }
    const auto name_end = rest.find('[');
    const auto name = rest.substr(0, name_end);
    rest.remove_prefix(name_end == std::string_view::npos ? rest.size() : name_end);
    if (name == "beta" || name == "alpha") {
        p.target = name == "beta" ? Target::beta : Target::alpha;
        p.i = parse_index(rest, text);
        p.j = p.i;
    } else if (name == "coupling") {
        p.i = parse_index(rest, text);
        p.j = parse_index(rest, text);
        if (rest == ".re") {
            p.target = Target::coupling_re;
        } else if (rest == ".im") {
            p.target = Target::coupling_im;
        } else {
            throw InputError("parameter path '" + std::string(text) + "': expected .re or .im");
        }
        rest = {};
        if (p.i == p.j) {
            throw InputError("parameter path '" + std::string(text) + "': diagonal belongs to alpha");
        }
    } else {
        throw InputError("parameter path '" + std::string(text) + "': unknown parameter '" +
                         std::string(name) + "'");
    }
    if (!rest.empty()) {
        throw InputError("parameter path '" + std::string(text) + "': trailing '" + std::string(rest) + "'");
    }
    return p;
}

std::string ParameterPath::to_string() const {
    std::string s = negate ? "-" : "";
    switch (target) {
    case Target::beta: return s + "beta[" + std::to_string(i + 1) + "]";
    case Target::alpha: return s + "alpha[" + std::to_string(i + 1) + "]";
    case Target::coupling_re:
    case Target::coupling_im:
        return s + "coupling[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]" +
               (target == Target::coupling_re ? ".re" : ".im");
    }
    return s;
}

void ParameterPath::apply(ModelSpec& spec, double value) const {
    if (i >= spec.size() || j >= spec.size()) {
        throw InputError("parameter " + to_string() + " does not resolve in a " +
                         std::to_string(spec.size()) + "-state model");
    }
    const double v = negate ? -value : value;
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    switch (target) {
    case Target::beta: spec.beta[a] = v; break;
    case Target::alpha: spec.alpha[a] = v; break;
    case Target::coupling_re: spec.set_coupling(i, j, {v, spec.coupling(a, b).imag()}); break;
    case Target::coupling_im: spec.set_coupling(i, j, {spec.coupling(a, b).real(), v}); break;
    }
}

std::vector<double> linear_grid(double start, double stop, std::size_t count) {
    if (count < 1) throw InputError("grid count must be >= 1");
    if (count == 1) return {start};
    std::vector<double> v(count);
    const double d = static_cast<double>(count - 1);
    // Weighted form keeps symmetric grids exactly symmetric.
    for (std::size_t k = 0; k < count; ++k) {
        const double kk = static_cast<double>(k);
        v[k] = (start * (d - kk) + stop * kk) / d;
    }
    return v;
}

std::vector<double> parse_grid(std::string_view text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw InputError("grid must be start:stop:count");
    const double start = parse_number(text.substr(0, c1));
    const double stop = parse_number(text.substr(c1 + 1, c2 - c1 - 1));
    const double count = parse_number(text.substr(c2 + 1));
    if (!(count >= 1.0) || count != std::floor(count)) throw InputError("grid count must be a positive integer");
    return linear_grid(start, stop, static_cast<std::size_t>(count));
}

bool SweepResult::all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
}

SweepResult run_sweep(const ModelSpec& base, const SweepSpec& sweep, const SweepOptions& options) {
    if (sweep.values.empty()) throw InputError("sweep has no values");
    if (options.initial >= base.size()) throw InputError("initial state out of range");
    {
        ModelSpec probe = base;
        sweep.path.apply(probe, sweep.values.front());
    }
    options.config.check();

    std::vector<double> values = sweep.values;
    std::stable_sort(values.begin(), values.end());

    const std::size_t n = base.size();
    SweepResult result;
    result.states = n;
    result.full_matrix = sweep.full_matrix;
    result.rows.resize(values.size());

    IntegratorConfig cfg = options.config;
    cfg.sample_count = 2;
    // Points run concurrently; matrix columns within a point run serially.
    parallel_for(
        values.size(),
        [&](std::size_t k) {
            SweepRow& row = result.rows[k];
            row.value = values[k];
            try {
                ModelSpec spec = base;
                sweep.path.apply(spec, values[k]);
                const auto violations = validate(spec);
                if (has_errors(violations)) {
                    throw InputError("invalid model at " + sweep.path.to_string() + " = " +
                                     std::to_string(values[k]) + ": " + violations.front().message);
                }
                const double window = options.window ? *options.window : choose_window(spec);
                if (sweep.full_matrix) {
                    const auto s = scattering_matrix(spec, window, cfg, {false, 1});
                    row.probabilities.assign(s.probabilities.data(), s.probabilities.data() + n * n);
                } else {
                    row.probabilities = scattering_column(spec, options.initial, window, cfg)
                                            .final_probabilities();
                }
            } catch (const std::exception& e) {
                row.error = e.what();
                row.probabilities.assign(sweep.full_matrix ? n * n : n,
                                         std::numeric_limits<double>::quiet_NaN());
            }
        },
        options.workers);
    return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    const std::size_t n = result.states;
    os << "param";
    if (result.full_matrix) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) os << ",P_" << i + 1 << '_' << j + 1;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) os << ",P" << i + 1;
    }
    os << '\n';
    char buf[40];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.value);
        os << buf;
        for (double p : row.probabilities) {
            std::snprintf(buf, sizeof(buf), "%.17g", p);
            os << ',' << buf;
        }
        os << '\n';
    }
}

} // namespace mlz
