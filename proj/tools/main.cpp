#include "rscn/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return rscn::run_cli(argc, argv, std::cout, std::cerr);
}
