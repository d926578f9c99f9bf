#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bexp/inference.hpp"
#include "bexp/model.hpp"

namespace bexp::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumeric = 4 };

// Bad flags or inputs that fail validation (exit 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files (exit 3).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

// Writes to a temporary file next to `path`, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// BED1 text dataset: "BED1 <N> <H> <W>\n", then one line of H*W '0'/'1'
// characters per record, row-major, LF endings.
struct Dataset {
    Shape shape;
    std::vector<BinaryVector> records;
};

std::string format_dataset(const Dataset& ds);
Dataset parse_dataset(std::string_view text);  // throws UsageError
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);

// Model JSON, version 1. Numbers are written in their shortest form that
// reads back to the same double.
std::string format_model(const ExpertModel& model);
ExpertModel parse_model(std::string_view text);  // throws UsageError
ExpertModel read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const ExpertModel& model);

// [{"picks": [[k, t], ...], "loglik": x, "trace": [...]}, ...]
std::string format_representations(std::span<const Representation> reps);
std::vector<Representation> parse_representations(std::string_view text);

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

// Binary PGM, maxval 255; values in [0,1] map linearly and round to nearest.
std::string encode_pgm(Shape shape, std::span<const double> values);

// 0 -> blue, 1/2 -> gray (128,128,128), 1 -> yellow, linear in between.
std::array<std::uint8_t, 3> diverging_color(double p);

// Binary PPM (P6) with the diverging colormap.
std::string encode_ppm(Shape shape, std::span<const double> values);

// Template image: PPM for symmetric rules, PGM otherwise.
std::string encode_template(const RuleKind& rule, Shape shape, std::span<const double> values, std::string& ext);

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

// args excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bexp::cli
