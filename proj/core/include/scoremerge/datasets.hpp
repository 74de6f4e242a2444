#pragma once

#include <cstdint>
#include <string>

#include "scoremerge/gmm.hpp"
#include "scoremerge/linalg.hpp"

namespace scoremerge {

enum class DatasetKind { gmm, checkerboard, rings, quantized_gmm };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gmm;
    std::size_t dim = 2;
    std::size_t n_train = 4096;
    std::size_t n_test = 1024;
    std::size_t bit_depth = 0;  // quantized kinds; 0 selects the default (5)
    std::uint64_t seed = 0;

    bool quantized() const { return kind == DatasetKind::quantized_gmm; }
    void validate() const;
};

/// Materialized dataset. train/test hold continuous values in roughly
/// [-1,1)^dim (for quantized kinds these are dequantized once, with a
/// fixed stream, so training sees continuous data); test_symbols holds the
/// discrete values needed by the dequantized NLL bound.
struct Dataset {
    DatasetSpec spec;
    Matrix train;
    Matrix test;
    Matrix test_symbols;  // empty unless spec.quantized()
};

/// Deterministic given spec.seed; train/test come from disjoint index
/// ranges of one stream.
Dataset make_dataset(const DatasetSpec& spec);

/// The default desk-scale benchmark: a 4-mode, unequal-weight mixture in
/// 2D with modes near the corners of [-0.5, 0.5]^2.
GaussianMixtureSpec benchmark_gmm();

/// Center of a discrete symbol's bin under the [-1,1) mapping.
double dequant_center(std::uint64_t symbol, std::size_t bit_depth);

/// Symbol whose bin contains y (clamped to the valid range).
std::uint64_t quantize_symbol(double y, std::size_t bit_depth);

}  // namespace scoremerge
