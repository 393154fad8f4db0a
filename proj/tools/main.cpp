// SPDX-License-Identifier: Apache-2.0

#include "elastree/cli.hpp"

int main(int argc, char** argv) { return elastree::cli_main(argc, argv); }
