#pragma once

// Directional energy map emission: a portable pixmap (azimuth on x,
// elevation on y) and a plain-text grid that reloads bit-exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diffau/ambisonics.hpp"
#include "diffau/common.hpp"

namespace diffau {

namespace detail {

// Compact inferno-like ramp; u in [0,1], 0 maps to black.
inline void heat_color(double u, unsigned char rgb[3]) {
    u = std::clamp(u, 0.0, 1.0);
    const double r = std::clamp(3.0 * u, 0.0, 1.0);
    const double g = std::clamp(3.0 * u - 1.0, 0.0, 1.0);
    const double b = std::clamp(3.0 * u - 2.0, 0.0, 1.0);
    rgb[0] = static_cast<unsigned char>(255.0 * std::pow(r, 0.8));
    rgb[1] = static_cast<unsigned char>(255.0 * 0.85 * g);
    rgb[2] = static_cast<unsigned char>(255.0 * (0.9 * b + 0.25 * r * (1.0 - g)));
}

}  // namespace detail

struct EnergyPlotFiles {
    std::filesystem::path image;
    std::filesystem::path table;
};

// Writes <basename>.ppm and <basename>.txt next to each other.
inline EnergyPlotFiles emit_energy_plot(const AmbisonicsSignal& sig, const std::filesystem::path& basename,
                                        double azimuth_step_deg = 2.0, double colatitude_step_deg = 2.0) {
    const EnergyMap map =
        directional_energy_map(sig, azimuth_step_deg * kPi / 180.0, colatitude_step_deg * kPi / 180.0);
    const Eigen::Index n_az = map.values.rows(), n_col = map.values.cols();

    EnergyPlotFiles files{basename, basename};
    files.image += ".ppm";
    files.table += ".txt";

    // image: x = azimuth (0..360), y = elevation (+90 at top), i.e. rows run
    // through colatitude 0..180 top to bottom
    atomic_write(files.image, [&](std::ostream& out) {
        out << "P6\n" << n_az << ' ' << n_col << "\n255\n";
        std::vector<unsigned char> row(static_cast<size_t>(n_az) * 3);
        for (Eigen::Index j = 0; j < n_col; ++j) {
            for (Eigen::Index i = 0; i < n_az; ++i) detail::heat_color(map.values(i, j), &row[static_cast<size_t>(i) * 3]);
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
        }
    });

    // table: header row of azimuth degrees, header column of colatitude
    // degrees, %.17g values so a reload reproduces the grid exactly
    atomic_write(files.table, [&](std::ostream& out) {
        char buf[64];
        out << "colat_deg\\az_deg";
        for (Eigen::Index i = 0; i < n_az; ++i) {
            std::snprintf(buf, sizeof buf, "\t%g", azimuth_step_deg * static_cast<double>(i));
            out << buf;
        }
        out << '\n';
        for (Eigen::Index j = 0; j < n_col; ++j) {
            std::snprintf(buf, sizeof buf, "%g", colatitude_step_deg * static_cast<double>(j));
            out << buf;
            for (Eigen::Index i = 0; i < n_az; ++i) {
                std::snprintf(buf, sizeof buf, "\t%.17g", map.values(i, j));
                out << buf;
            }
            out << '\n';
        }
    });
    return files;
}

// Reload the table emitted above (values only).
inline Eigen::MatrixXd load_energy_grid(const std::filesystem::path& table_path) {
    std::ifstream in(table_path);
    if (!in) throw io_error("cannot open grid table: " + table_path.string());
    std::string header;
    std::getline(in, header);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        bool first = true;
        while (std::getline(ss, cell, '\t')) {
            if (first) {
                first = false;
                continue;
            }
            vals.push_back(std::stod(cell));
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw io_error("empty grid table: " + table_path.string());
    Eigen::MatrixXd grid(static_cast<Eigen::Index>(rows[0].size()), static_cast<Eigen::Index>(rows.size()));
    for (size_t j = 0; j < rows.size(); ++j)
        for (size_t i = 0; i < rows[j].size(); ++i)
            grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
    return grid;
}

}  // namespace diffau
