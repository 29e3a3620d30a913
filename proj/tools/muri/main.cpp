// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "muri/cli.hpp"

int main(int argc, char** argv) { return muri::cli::run_cli(argc, argv, std::cout, std::cerr); }
