/** Keyboard bindings: key events become cockpit commands. */

export type KeyCommand =
  | { kind: "toolbar"; name: "PAUSE" | "RUN" | "ESTOP" }
  | { kind: "steer"; action: "accel" | "brake" | "left" | "right" | "straight" }
  | { kind: "none" };

export function keyToCommand(key: string): KeyCommand {
  switch (key) {
    case " ":
    case "Spacebar":
      return { kind: "toolbar", name: "PAUSE" };
    case "r":
    case "R":
      return { kind: "toolbar", name: "RUN" };
    case "Escape":
      return { kind: "toolbar", name: "ESTOP" };
    case "ArrowUp":
    case "w":
      return { kind: "steer", action: "accel" };
    case "ArrowDown":
    case "s":
      return { kind: "steer", action: "brake" };
    case "ArrowLeft":
    case "a":
      return { kind: "steer", action: "left" };
    case "ArrowRight":
    case "d":
      return { kind: "steer", action: "right" };
    case "x":
      return { kind: "steer", action: "straight" };
    default:
      return { kind: "none" };
  }
}
