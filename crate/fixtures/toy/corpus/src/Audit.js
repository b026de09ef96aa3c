class Audit {
  constructor() {
    this.events = [];
  }

  record(actor, action, target) {
    this.events.push({ actor, action, target: redact(target) });
  }

  byActor(actor) {
    return this.events.filter((e) => e.actor === actor).map((e) => `${e.action} ${e.target}`);
  }
}

function redact(target) {
  return target.includes('@') ? target.replace(/^[^@]+/, '***') : target;
}

module.exports = { Audit };
