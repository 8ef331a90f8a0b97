"""Train, evaluate, and serve routing checkpoints from the command line."""

from __future__ import annotations

import argparse
import sys

from .backbone import BackboneSpec
from .data import TIER_NAMES, load_examples
from .server import serve_scorer
from .train import (
    Checkpoint,
    evaluate_router,
    train_binary,
    train_dpo,
    train_multiclass,
    train_pairwise_rank,
)


def cmd_train(args: argparse.Namespace) -> int:
    examples = load_examples(args.data)
    spec = BackboneSpec(buckets=args.buckets)
    common = dict(spec=spec, epochs=args.epochs, seed=args.seed, lr=args.lr)
    if args.mode == "multiclass":
        checkpoint = train_multiclass(examples, **common)
    elif args.mode == "binary":
        if not args.tier:
            print("error: --tier is required for binary mode", file=sys.stderr)
            return 2
        checkpoint = train_binary(examples, args.tier, **common)
    elif args.mode == "rank":
        checkpoint = train_pairwise_rank(examples, margin=args.margin, **common)
    else:
        checkpoint = train_dpo(examples, beta=args.beta, **common)
    checkpoint.save(args.out)
    curve = checkpoint.manifest["loss_curve"]
    first = curve[0] if curve else float("nan")
    last = curve[-1] if curve else float("nan")
    print(f"trained {args.mode} on {len(examples)} examples; loss {first:.4f} -> {last:.4f}")
    print(f"checkpoint -> {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    examples = load_examples(args.data)
    accuracy, confusion, majority = evaluate_router(checkpoint, examples)
    print(f"accuracy = {accuracy:.4f} (majority-class baseline {majority:.4f})")
    print("confusion (rows = oracle label, columns = prediction):")
    header = " ".join(f"{name:>12}" for name in TIER_NAMES)
    print(f"{'':>12} {header}")
    for name, row in zip(TIER_NAMES, confusion):
        cells = " ".join(f"{c:>12}" for c in row)
        print(f"{name:>12} {cells}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    checkpoints = [Checkpoint.load(path) for path in args.checkpoint]
    service = serve_scorer(checkpoints, (args.host, args.port))
    print(f"serving scorer protocol on {service.url}/score (ctrl-c to stop)")
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        service.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiertrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a routing checkpoint")
    p_train.add_argument("--data", required=True, help="labeler JSONL export")
    p_train.add_argument("--out", required=True, help="checkpoint directory")
    p_train.add_argument("--mode", choices=["multiclass", "binary", "rank", "dpo"],
                         default="multiclass")
    p_train.add_argument("--tier", choices=list(TIER_NAMES[:-1]))
    p_train.add_argument("--epochs", type=int, default=10)
    p_train.add_argument("--seed", type=int, default=42)
    p_train.add_argument("--lr", type=float, default=0.5)
    p_train.add_argument("--buckets", type=int, default=256)
    p_train.add_argument("--margin", type=float, default=1.0)
    p_train.add_argument("--beta", type=float, default=0.1)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="accuracy and confusion on labeled data")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="serve checkpoints over the scorer protocol")
    p_serve.add_argument("--checkpoint", action="append", required=True,
                         help="checkpoint directory; repeat for cascade stages")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8571)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
