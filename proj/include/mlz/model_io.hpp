// model_io.hpp: line-oriented model file format.
//
//   n <int>
//   beta <f> <f> ...
//   alpha <f> <f> ...
//   c <i> <j> <re> <im>      (1-based, i < j; the conjugate entry is implied)
//
// '#' starts a comment. Blank lines are ignored.

#pragma once

#include "mlz/model.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace mlz {

class ModelParseError : public InputError {
public:
    ModelParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

ModelSpec parse_model(std::string_view text);
ModelSpec read_model_file(const std::string& path);

// Shortest round-trip decimal for every float. Only nonzero upper-triangle
// couplings are written.
std::string format_model(const ModelSpec& spec, std::string_view header_comment = {});

// Shortest decimal that parses back to the same double.
std::string shortest(double value);

} // namespace mlz
