#include "nloch/io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <json.hpp>

#include "nloch/errors.hpp"

namespace nloch {

static_assert(std::endian::native == std::endian::little, "NLF1 I/O assumes a little-endian host");

void write_nlf1(const std::filesystem::path& path, const Field& f, double t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    const Grid2D& g = f.grid();
    const std::uint32_t nx = g.nx, ny = g.ny;
    out.write("NLF1", 4);
    out.write(reinterpret_cast<const char*>(&nx), 4);
    out.write(reinterpret_cast<const char*>(&ny), 4);
    out.write(reinterpret_cast<const char*>(&g.lx), 8);
    out.write(reinterpret_cast<const char*>(&g.ly), 8);
    out.write(reinterpret_cast<const char*>(&t), 8);
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(8 * f.size()));
    if (!out) throw Error("write failed for " + path.string());
}

Snapshot read_nlf1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[4];
    std::uint32_t nx = 0, ny = 0;
    Grid2D g;
    double t = 0.0;
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NLF1", 4) != 0) throw Error(path.string() + " is not an NLF1 file");
    in.read(reinterpret_cast<char*>(&nx), 4);
    in.read(reinterpret_cast<char*>(&ny), 4);
    in.read(reinterpret_cast<char*>(&g.lx), 8);
    in.read(reinterpret_cast<char*>(&g.ly), 8);
    in.read(reinterpret_cast<char*>(&t), 8);
    g.nx = static_cast<int>(nx);
    g.ny = static_cast<int>(ny);
    Snapshot s{Field(g), t};
    in.read(reinterpret_cast<char*>(s.field.data()), static_cast<std::streamsize>(8 * s.field.size()));
    if (!in) throw Error("truncated NLF1 file " + path.string());
    return s;
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

} // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << quote(header[k]);
    out_ << "\r\n";
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != width_) throw ShapeMismatch("csv row width differs from header");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out_ << ',';
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) out_ << format_real(v);
                else if constexpr (std::is_same_v<T, long long>) out_ << v;
                else out_ << quote(v);
            },
            cells[k]);
    }
    out_ << "\r\n";
}

void write_field_csv(const std::filesystem::path& path, const Field& f) {
    CsvWriter w(path, {"x", "y", "value"});
    const Grid2D& g = f.grid();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) w.row({g.x(i), g.y(j), f.at(i, j)});
}

void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj, int stride,
                      const std::string& extra_json) {
    std::filesystem::create_directories(dir);
    if (stride < 1) stride = 1;
    nlohmann::json man = nlohmann::json::parse(extra_json);
    nlohmann::json files = nlohmann::json::array();
    const std::size_t n = traj.levels();
    for (std::size_t k = 0; k < n; ++k) {
        if (k % stride != 0 && k + 1 != n) continue;
        nlohmann::json entry{{"level", k}, {"t", traj.times[k]}};
        for (int c = 0; c < 3; ++c) {
            const std::string name = fmt::format("{}_{:06d}.nlf", traj.roles[c], k);
            write_nlf1(dir / name, traj.comp[c][k], traj.times[k]);
            entry[traj.roles[c]] = name;
        }
        files.push_back(entry);
    }
    man["grid"] = {{"nx", traj.grid.nx}, {"ny", traj.grid.ny}, {"lx", traj.grid.lx}, {"ly", traj.grid.ly},
                   {"dt", traj.grid.dt}, {"nt", traj.grid.nt}};
    man["roles"] = traj.roles;
    man["times"] = traj.times;
    man["snapshots"] = files;
    std::ofstream out(dir / "manifest.json");
    out << man.dump(2) << "\n";
}

} // namespace nloch
