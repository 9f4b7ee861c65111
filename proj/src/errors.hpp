#pragma once
#include <stdexcept>
#include <string>

namespace tfsde {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// invalid parameters, out-of-domain arguments, unusable configuration
struct config_error : error {
    using error::error;
};

// mismatched vector/matrix/grid dimensions
struct shape_error : error {
    using error::error;
};

// requested tolerance unreachable under the given evaluation budget
struct accuracy_error : error {
    using error::error;
};

// Cholesky pivot at or below tolerance; `row` is the failing 0-based row
struct factorization_error : error {
    int row;
    factorization_error(const std::string& msg, int failing_row)
        : error(msg), row(failing_row) {}
};

// refinement rungs not driven by one shared noise realization
struct protocol_error : error {
    using error::error;
};

// rate undefined (zero error input)
struct degenerate_error : error {
    using error::error;
};

} // namespace tfsde
