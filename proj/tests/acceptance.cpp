// Standalone acceptance gate: one line per check, nonzero exit on any failure.
#include <iostream>

#include "qtb/selftest.hpp"

int main() {
    return qtb::print_acceptance_report(qtb::run_acceptance_checks(), std::cout);
}
