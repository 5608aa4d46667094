// SPDX-License-Identifier: Apache-2.0
// Reads an SMT-LIB2 script on stdin and answers like `z3 -in`.
#include <iostream>
#include <iterator>
#include <string>

#include "pfa/error.hpp"
#include "pfa/solver.hpp"

int main() {
    const std::string script((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    try {
        std::cout << pfa::run_builtin_solver(script);
    } catch (const pfa::Error& e) {
        std::cout << "(error \"" << e.what() << "\")\n";
        return 1;
    }
    return 0;
}
