#pragma once

#include <cstddef>
#include <functional>

namespace spike {

/// Execution policy for the data-parallel kernels. Serial is the reference path.
enum class Exec { Serial, Parallel };

Exec default_exec();
void set_default_exec(Exec e);

/// Sum of f(i) for i in [0, n). Blocks of fixed size are reduced in index order,
/// so the result does not depend on the number of threads.
double blocked_sum(std::size_t n, const std::function<double(std::size_t)>& f, Exec exec);

/// Plain left-to-right sum, the serial reference for blocked_sum.
double naive_sum(std::size_t n, const std::function<double(std::size_t)>& f);

/// Calls f(i) for i in [0, n).
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& f, Exec exec);

int thread_count();

}  // namespace spike
