#include "hqfnn/cli.hpp"

int main(int argc, char** argv) { return hqfnn::run_cli(argc, argv); }
