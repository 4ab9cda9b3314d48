import type { ApiClient, ChatReply } from "./api";
import type { WhatIfPanel } from "./whatif";

// Chat pane: transcript, input box, and the server's suggested-question
// chips. Replies carrying a what-if result render the delta inline with an
// "apply to sliders" action that routes through the shared panel.

export class ChatPane {
  readonly el: HTMLElement;
  private readonly transcript: HTMLElement;
  private readonly chips: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly sendButton: HTMLButtonElement;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private panel: WhatIfPanel,
  ) {
    this.el = document.createElement("section");
    this.el.className = "chat-pane";

    this.transcript = document.createElement("ul");
    this.transcript.className = "transcript";
    this.chips = document.createElement("div");
    this.chips.className = "chips";
    this.input = document.createElement("input");
    this.input.className = "chat-input";
    this.sendButton = document.createElement("button");
    this.sendButton.className = "chat-send";
    this.sendButton.textContent = "Send";
    this.sendButton.addEventListener("click", () => {
      const text = this.input.value.trim();
      if (text) void this.send(text);
    });
    this.el.append(this.transcript, this.chips, this.input, this.sendButton);
  }

  async send(text: string): Promise<void> {
    this.addEntry("user", text);
    this.input.value = "";
    let reply: ChatReply;
    try {
      reply = await this.api.chat(this.sessionId, text);
    } catch {
      this.addRetry(text);
      return;
    }
    this.renderReply(reply);
  }

  private addEntry(role: string, text: string): HTMLElement {
    const li = document.createElement("li");
    li.className = `entry entry-${role}`;
    li.textContent = text;
    this.transcript.appendChild(li);
    return li;
  }

  private addRetry(text: string): void {
    const li = this.addEntry("error", "That didn't go through. ");
    const retry = document.createElement("button");
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.send(text));
    li.appendChild(retry);
  }

  private renderReply(reply: ChatReply): void {
    const li = this.addEntry("assistant", reply.text);

    if (reply.whatif && Object.keys(reply.whatif.overrides).length > 0) {
      const delta = document.createElement("span");
      delta.className = "inline-delta";
      delta.textContent = ` (${reply.whatif.delta >= 0 ? "+" : ""}${(reply.whatif.delta * 100).toFixed(1)})`;
      li.appendChild(delta);

      const overrides = reply.whatif.overrides;
      const apply = document.createElement("button");
      apply.className = "apply-to-sliders";
      apply.textContent = "Apply to sliders";
      apply.addEventListener("click", () => {
        for (const [name, change] of Object.entries(overrides)) {
          void this.panel.applyOverride(name, change.new);
        }
      });
      li.appendChild(apply);
    }

    this.chips.replaceChildren();
    for (const question of reply.suggested_questions.slice(0, 3)) {
      const chip = document.createElement("button");
      chip.className = "chip";
      chip.textContent = question;
      // the chip sends its literal text, nothing paraphrased
      chip.addEventListener("click", () => void this.send(question));
      this.chips.appendChild(chip);
    }
  }

  setOffline(offline: boolean): void {
    this.input.disabled = offline;
    this.sendButton.disabled = offline;
  }
}
