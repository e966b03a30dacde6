// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "poolnet/cli.hpp"

int main(int argc, char** argv) { return poolnet::run_cli(argc, argv, std::cout, std::cerr); }
