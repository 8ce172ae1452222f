public class Cell extends BaseCell {
    public void tick() { }
}
