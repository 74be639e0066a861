// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "hammerlab/cli.hpp"

int main(int argc, char** argv) { return hammerlab::run_cli(argc, argv, std::cout, std::cerr); }
