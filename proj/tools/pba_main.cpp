#include "pba/cli.hpp"

int main(int argc, char** argv) { return pba::run_cli(argc, argv); }
