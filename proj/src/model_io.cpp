#include "mlz/model_io.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace mlz {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
        if (pos > start) out.push_back(line.substr(start, pos - start));
    }
    return out;
}

double to_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ModelParseError(line, "not a number: '" + std::string(tok) + "'");
    }
    return v;
}

long to_int(std::string_view tok, std::size_t line) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ModelParseError(line, "not an integer: '" + std::string(tok) + "'");
    }
    return v;
}

struct Entry {
    std::size_t line;
    long i, j;
    cplx value;
};

} // namespace

ModelParseError::ModelParseError(std::size_t line, const std::string& what)
    : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

ModelSpec parse_model(std::string_view text) {
    std::optional<long> n;
    std::optional<std::vector<double>> beta;
    std::optional<std::vector<double>> alpha;
    std::size_t beta_line = 0;
    std::size_t alpha_line = 0;
    std::vector<Entry> entries;

    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;

        const std::string_view key = tok[0];
        if (key == "n") {
            if (n) throw ModelParseError(lineno, "duplicate 'n'");
            if (tok.size() != 2) throw ModelParseError(lineno, "'n' takes one integer");
            n = to_int(tok[1], lineno);
            if (*n < 1) throw ModelParseError(lineno, "'n' must be positive");
        } else if (key == "beta" || key == "alpha") {
            auto& slot = key == "beta" ? beta : alpha;
            if (slot) throw ModelParseError(lineno, "duplicate '" + std::string(key) + "'");
            std::vector<double> values;
            for (std::size_t k = 1; k < tok.size(); ++k) values.push_back(to_double(tok[k], lineno));
            slot = std::move(values);
            (key == "beta" ? beta_line : alpha_line) = lineno;
        } else if (key == "c") {
            if (tok.size() != 5) throw ModelParseError(lineno, "'c' takes i j re im");
            Entry e{lineno, to_int(tok[1], lineno), to_int(tok[2], lineno),
                    cplx(to_double(tok[3], lineno), to_double(tok[4], lineno))};
            if (e.i == e.j) {
                throw ModelParseError(lineno, "diagonal coupling is not allowed; use alpha");
            }
            if (e.i > e.j) throw ModelParseError(lineno, "coupling indices must satisfy i < j");
            entries.push_back(e);
        } else {
            throw ModelParseError(lineno, "unknown key '" + std::string(key) + "'");
        }
        if (end == text.size()) break;
    }

    if (!n) throw ModelParseError(lineno, "missing 'n'");
    if (!beta) throw ModelParseError(lineno, "missing 'beta'");
    if (!alpha) throw ModelParseError(lineno, "missing 'alpha'");
    const auto count = static_cast<std::size_t>(*n);
    if (beta->size() != count) {
        throw ModelParseError(beta_line, "'beta' has " + std::to_string(beta->size()) + " values, expected " +
                                          std::to_string(count));
    }
    if (alpha->size() != count) {
        throw ModelParseError(alpha_line, "'alpha' has " + std::to_string(alpha->size()) +
                                          " values, expected " + std::to_string(count));
    }

    ModelSpec spec = ModelSpec::diagonal(std::move(*beta), std::move(*alpha));
    std::vector<bool> seen(count * count, false);
    for (const Entry& e : entries) {
        if (e.i < 1 || e.j > *n) throw ModelParseError(e.line, "coupling index out of range");
        const auto i = static_cast<std::size_t>(e.i - 1);
        const auto j = static_cast<std::size_t>(e.j - 1);
        if (seen[i * count + j]) throw ModelParseError(e.line, "duplicate coupling");
        seen[i * count + j] = true;
        spec.set_coupling(i, j, e.value);
    }
    return spec;
}

ModelSpec read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string shortest(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string format_model(const ModelSpec& spec, std::string_view header_comment) {
    std::ostringstream os;
    if (!header_comment.empty()) {
        std::size_t pos = 0;
        while (pos < header_comment.size()) {
            std::size_t end = header_comment.find('\n', pos);
            if (end == std::string_view::npos) end = header_comment.size();
            os << "# " << header_comment.substr(pos, end - pos) << '\n';
            pos = end + 1;
        }
    }
    const auto n = spec.beta.size();
    os << "n " << n << '\n';
    os << "beta";
    for (Eigen::Index i = 0; i < n; ++i) os << ' ' << shortest(spec.beta[i]);
    os << "\nalpha";
    for (Eigen::Index i = 0; i < n; ++i) os << ' ' << shortest(spec.alpha[i]);
    os << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const cplx c = spec.coupling(i, j);
            if (c == cplx(0.0, 0.0)) continue;
            os << "c " << i + 1 << ' ' << j + 1 << ' ' << shortest(c.real()) << ' '
               << shortest(c.imag()) << '\n';
        }
    }
    return os.str();
}

} // namespace mlz
