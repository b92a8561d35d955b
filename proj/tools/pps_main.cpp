#include "pps/cli.hpp"

int main(int argc, char** argv) { return pps::run_cli(argc, argv); }
