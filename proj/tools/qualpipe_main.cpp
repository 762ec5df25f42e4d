#include "qualpipe/cli.hpp"

int main(int argc, char** argv) { return qualpipe::run_cli(argc, argv); }
