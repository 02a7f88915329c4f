#pragma once

#include <segm/dataset.hpp>
#include <segm/loss.hpp>

#include <cstdint>
#include <vector>

namespace segm {

// 4-nearest-neighbour circulant precision matrix.
struct GaussianSpec {
    Index d = 25;
    double mu = 0.2;
};

// rows x cols grid, {0,1} spins, no external field.
struct IsingSpec {
    Index rows = 2;
    Index cols = 2;
    double mu = 0.5;
    bool random_signs = false;
    std::uint64_t sign_seed = 0;

    Index d() const { return rows * cols; }
};

// Two stacked rows x cols grids: layer 1 binary (nodes 0..rc-1), layer 2
// Gaussian (nodes rc..2rc-1). Node (r, c) of layer 1 links to (r, c) of
// layer 2. Gaussian nodes have unit conditional variance.
struct MixedSpec {
    Index rows = 2;
    Index cols = 2;
    double mu = 0.2;
    bool random_signs = false;
    std::uint64_t sign_seed = 0;

    Index d() const { return 2 * rows * cols; }
    Index binary_count() const { return rows * cols; }
};

struct GibbsConfig {
    int burn_in = 1000;  // sweeps
    int thin = 10;       // sweeps between kept samples
    std::uint64_t seed = 0;

    void validate() const;
};

// Upper-triangle edge list (j < k), lexicographic.
using EdgeList = std::vector<RowPair>;

Matrix build_precision(const GaussianSpec& spec);
EdgeList gaussian_edges(Index d);
// Node-conditional coefficients of N(0, theta^{-1}) with unit diagonal:
// beta*_jk = -theta_jk, zero diagonal.
Matrix gaussian_interactions(const Matrix& theta);

// n i.i.d. rows of N(0, theta^{-1}) via the Cholesky factor of theta.
Dataset sample_gaussian(const Matrix& theta, Index n, std::uint64_t seed);

EdgeList grid_edges(Index rows, Index cols);
// Symmetric interaction matrix beta*_jk of the grid design.
Matrix ising_interactions(const IsingSpec& spec);
Dataset sample_ising(const IsingSpec& spec, Index n, const GibbsConfig& cfg);

// Probability of every configuration; bit j of the table index is x_j.
Vector ising_exact_distribution(const IsingSpec& spec);
Vector ising_exact_distribution(const Matrix& interactions);

EdgeList mixed_edges(const MixedSpec& spec);
Matrix mixed_interactions(const MixedSpec& spec);
Dataset sample_mixed(const MixedSpec& spec, Index n, const GibbsConfig& cfg);

// Nonzero upper-triangle entries of an interaction matrix.
EdgeList support_edges(const Matrix& interactions);

}  // namespace segm
