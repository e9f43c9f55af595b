// execution.hpp - selects between the OpenMP kernels and their serial references.
#pragma once

namespace pacconf {

/// Every parallel kernel keeps a serial twin. Both consume the same per-item
/// random streams and reduce integer counts, so their results are identical.
enum class Execution { serial, parallel };

}  // namespace pacconf
