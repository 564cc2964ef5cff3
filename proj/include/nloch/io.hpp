#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "nloch/field.hpp"
#include "nloch/state.hpp"

namespace nloch {

struct Snapshot {
    Field field;
    double t = 0.0;
};

// NLF1: little-endian {"NLF1", u32 nx, u32 ny, f64 lx, f64 ly, f64 t} then nx*ny f64, x fastest.
void write_nlf1(const std::filesystem::path& path, const Field& f, double t);
Snapshot read_nlf1(const std::filesystem::path& path);

// Shortest round-trip-safe rendering with 17 significant digits.
std::string format_real(double v);

using CsvCell = std::variant<double, long long, std::string>;

// RFC-4180 writer: CRLF line ends, quotes only where needed, header row first.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<CsvCell>& cells);

private:
    std::ofstream out_;
    std::size_t width_;
};

// x,y,value table of one field.
void write_field_csv(const std::filesystem::path& path, const Field& f);

// Snapshots role_NNNNNN.nlf at every `stride` levels (and the last one) plus manifest.json.
// `extra` is a JSON object text merged into the manifest.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj, int stride,
                      const std::string& extra_json = "{}");

} // namespace nloch
