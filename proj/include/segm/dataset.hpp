#pragma once

#include <segm/types.hpp>

#include <span>
#include <string>
#include <vector>

namespace segm {

/**
 * Immutable n x d observation matrix. Rows are samples, columns are
 * variables (nodes of the graph). Construction validates shape and
 * finiteness; afterwards every accessor is a const read.
 */
class Dataset {
public:
    explicit Dataset(Matrix values, std::vector<std::string> column_names = {});

    Index n() const { return values_.rows(); }
    Index d() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    const std::vector<std::string>& column_names() const { return names_; }

    // Rows in the given order (duplicates allowed only if the caller wants them).
    Dataset subset_rows(std::span<const Index> rows) const;

    // Optional preprocessing; returns a new dataset.
    Dataset centered() const;
    Dataset standardized() const;

private:
    Matrix values_;
    std::vector<std::string> names_;
};

}  // namespace segm
