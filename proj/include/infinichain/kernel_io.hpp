#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "infinichain/kernel.hpp"

namespace infinichain {

// Plain-text kernel description, one `key = value` per line, `#` starts a comment.
//
//   family = renewal            family = markov           family = mixture
//   p = [0.4, 0.3]              alphabet = 2              alphabet = 2
//   tail = periodic             order = 1                 weights = [2, 1, 1]
//   head = [0.5]                table = [0.9, 0.1,        normalize = true
//                                        0.2, 0.8]        q0 = uniform
//                                                         q1 = copy
//                                                         q2 = [ ... N^2 * N values ... ]
//
// Renewal: `tail = constant` repeats the last entry of p, `periodic` repeats all of p.
// Mixture components: `uniform`, `copy` (a_{-j} is repeated), or a flat row-major table.
Kernel parse_kernel(std::string_view text);

// Accepts a builtin name or a path to a kernel file.
Kernel load_kernel(const std::string& name_or_path);

std::vector<std::string> builtin_kernel_names();
std::string builtin_kernel_text(const std::string& name);

}  // namespace infinichain
