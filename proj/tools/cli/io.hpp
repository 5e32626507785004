#pragma once

#include <string>
#include <vector>

#include "csl/numerics/matrix.hpp"
#include "csl/subspace.hpp"

namespace csl::cli {

/// Rows of comma-separated reals; `header` skips the first line.
Matrix read_matrix_csv(const std::string& path, bool header = false);

/// %.17g, one row per line, optional header line.
void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});

std::vector<int> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<int>& labels);

/// A basis file holds one spanning vector per row; the subspace is their span.
Subspace read_basis(const std::string& path);
void write_basis(const std::string& path, const Subspace& s);

/// x,y[,z],label rows.
void write_coords_csv(const std::string& path, const Matrix& coords, const std::vector<int>& labels);

/// Scatter plot: one r=3 circle per point, colored by label from a fixed 8-color palette,
/// viewBox fitted to the data with a 5% margin.
std::string scatter_svg(const Matrix& coords, const std::vector<int>& labels);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

std::string format_double(double v);

}  // namespace csl::cli
