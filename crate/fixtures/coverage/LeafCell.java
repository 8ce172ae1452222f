public class LeafCell extends Cell {
    public void tick() { }
}
