#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/field.hpp"

namespace driftlab {

/// Uniform space-time grid of samples. Axis 0 is time, axes 1..d are space.
/// Values are stored with time slowest and components fastest.
struct GridData {
    int d = 1;
    int components = 1;
    std::vector<std::int64_t> counts;  // d + 1 entries
    std::vector<double> origin;        // d + 1 entries
    std::vector<double> spacing;       // d + 1 entries
    std::vector<double> values;

    std::size_t node_count() const;
    void validate() const;
};

/// Samples f on the grid described by `shape` (values are ignored and replaced).
GridData sample_field(const Field& f, GridData shape);

/// Text format: a header of keyword lines (`grid`, `dims`, `counts`, `origin`,
/// `spacing`) followed by whitespace-separated values.
void write_grid_text(const GridData& g, const std::string& path);
/// Binary format: magic "DLGRID01", int32 d, int32 components, int64 counts,
/// double origin, double spacing, double values (little endian).
void write_grid_binary(const GridData& g, const std::string& path);
/// Reads either format (detected from the leading bytes).
GridData read_grid(const std::string& path);

/// Multilinear interpolant; zero outside the grid box. A single time slice
/// yields a time-independent field.
Field grid_to_field(const GridData& g, std::string label = "grid");

}  // namespace driftlab
