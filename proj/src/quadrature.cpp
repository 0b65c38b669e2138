#include "gencalc/quadrature.hpp"

#include <sstream>

#include "gencalc/error.hpp"

namespace gencalc {

double require_converged(const QuadratureResult& r, const char* context) {
    if (!r.converged) {
        std::ostringstream os;
        os << "quadrature did not converge in " << context << " (estimate " << r.value << ", error "
           << r.error << ", " << r.evaluations << " evaluations)";
        throw QuadratureError(os.str());
    }
    return r.value;
}

}  // namespace gencalc
