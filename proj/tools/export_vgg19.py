#!/usr/bin/env python3
"""Write torchvision's ImageNet VGG19 conv weights as a flat tensor dict.

The output is readable by torch::pickle_load, so it can be used as
PATHOSR_VGG19_WEIGHTS or `vgg19_weights = ...` in a training config.
"""
import argparse

import torch
import torchvision


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", help="destination .pt file")
    args = ap.parse_args()
    model = torchvision.models.vgg19(weights=torchvision.models.VGG19_Weights.IMAGENET1K_V1)
    state = {k: v.float().contiguous() for k, v in model.state_dict().items() if k.startswith("features.")}
    torch.save(state, args.out)
    print(f"wrote {len(state)} tensors to {args.out}")


if __name__ == "__main__":
    main()
