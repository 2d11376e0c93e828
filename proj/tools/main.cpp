#include "folq/cli.hpp"

int main(int argc, char** argv) { return folq::run_cli(argc, argv); }
