// Acceptance suite: runs every criterion end to end and prints one line per
// criterion. Exit status is the number of failures.
#include <iostream>

#include "verify_checks.hpp"

int main() {
    return fedni::verify::run_suites(/*full=*/true, std::cout);
}
