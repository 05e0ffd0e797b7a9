#include "qkd/cli.hpp"

int main(int argc, char** argv) { return qkd::cli::run_main(argc, argv); }
