#include <segm/dataset.hpp>

#include <cmath>

namespace segm {

Dataset::Dataset(Matrix values, std::vector<std::string> column_names)
    : values_(std::move(values)), names_(std::move(column_names)) {
    if (values_.rows() < 2)
        throw DataError("dataset needs at least 2 rows, got " + std::to_string(values_.rows()));
    if (values_.cols() < 2)
        throw DataError("dataset needs at least 2 columns, got " + std::to_string(values_.cols()));
    for (Index c = 0; c < values_.cols(); ++c) {
        for (Index r = 0; r < values_.rows(); ++r) {
            if (!std::isfinite(values_(r, c)))
                throw DataError("non-finite value at row " + std::to_string(r) + ", column " +
                                std::to_string(c));
        }
    }
    if (names_.empty()) {
        names_.reserve(values_.cols());
        for (Index c = 0; c < values_.cols(); ++c) names_.push_back("X" + std::to_string(c));
    }
    if (static_cast<Index>(names_.size()) != values_.cols())
        throw DataError("column name count does not match column count");
}

Dataset Dataset::subset_rows(std::span<const Index> rows) const {
    Matrix sub(static_cast<Index>(rows.size()), d());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r] >= 0 && rows[r] < n(), "row index out of range");
        sub.row(static_cast<Index>(r)) = values_.row(rows[r]);
    }
    return Dataset(std::move(sub), names_);
}

Dataset Dataset::centered() const {
    Matrix m = values_;
    m.rowwise() -= m.colwise().mean();
    return Dataset(std::move(m), names_);
}

Dataset Dataset::standardized() const {
    Matrix m = values_;
    m.rowwise() -= m.colwise().mean();
    for (Index c = 0; c < m.cols(); ++c) {
        double sd = std::sqrt(m.col(c).squaredNorm() / static_cast<double>(m.rows() - 1));
        // Constant columns stay at zero.
        if (sd > 0) m.col(c) /= sd;
    }
    return Dataset(std::move(m), names_);
}

}  // namespace segm
